#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dupforge/unicode.hpp"

namespace dupforge {

/// Deaccents, collapses every whitespace run to one space and trims.
/// Total and idempotent.
inline std::string normalize_text(std::string_view raw) {
    auto const text = unicode::to_u32(unicode::deaccent(raw));
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char32_t c : text) {
        if (unicode::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        unicode::append_utf8(out, c);
    }
    return out;
}

namespace detail {

// Lowercased; matched against the whitespace-delimited token that ends in '.'.
inline constexpr std::array<std::u32string_view, 27> protected_abbreviations{
    U"e.g.", U"i.e.", U"cf.", U"fig.", U"figs.", U"eq.", U"eqs.", U"dr.", U"vs.",
    U"no.", U"nos.", U"mr.", U"mrs.", U"ms.", U"prof.", U"ref.", U"refs.", U"sec.",
    U"tab.", U"approx.", U"resp.", U"vol.", U"pp.", U"ca.", U"viz.", U"jr.", U"sr."};

inline bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

inline bool is_opener(char32_t c) {
    return c == U'"' || c == U'\'' || c == U'(' || c == U'[' || c == U'“' || c == U'‘';
}

inline bool is_protected(std::u32string_view text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !unicode::is_space(text[start - 1])) {
        --start;
    }
    auto const token = unicode::to_lower(text.substr(start, dot - start + 1));
    if (std::find(protected_abbreviations.begin(), protected_abbreviations.end(), token) !=
        protected_abbreviations.end()) {
        return true;
    }
    // Initials such as "J." in author lists.
    if (dot - start == 1 && unicode::is_upper(text[start])) {
        return true;
    }
    if (token == U"al." && start >= 3) {
        auto const prev = unicode::to_lower(text.substr(start - 3, 2));
        bool const word_start = start == 3 || unicode::is_space(text[start - 4]);
        return prev == U"et" && unicode::is_space(text[start - 1]) && word_start;
    }
    return false;
}

}  // namespace detail

/// Rule-based sentence splitter over normalized text.
///
/// A boundary follows a run of '.', '!' or '?' when the run is followed by
/// whitespace and then an uppercase letter or digit (optionally behind an
/// opening quote or bracket), or by end of text. A single '.' closing one
/// of the protected abbreviations or a single-capital initial never ends a
/// sentence.
inline std::vector<std::string> split_sentences(std::string_view normalized) {
    auto const text = unicode::to_u32(normalized);
    std::vector<std::string> sentences;
    auto emit = [&](std::size_t from, std::size_t to) {
        while (from < to && unicode::is_space(text[from])) {
            ++from;
        }
        while (to > from && unicode::is_space(text[to - 1])) {
            --to;
        }
        if (to > from) {
            sentences.push_back(unicode::to_utf8(std::u32string_view(text).substr(from, to - from)));
        }
    };

    std::size_t const n = text.size();
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < n) {
        if (!detail::is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < n && detail::is_terminal(text[run_end])) {
            ++run_end;
        }
        bool boundary = false;
        if (run_end == n) {
            boundary = true;
        } else if (unicode::is_space(text[run_end])) {
            std::size_t k = run_end;
            while (k < n && unicode::is_space(text[k])) {
                ++k;
            }
            if (k < n && detail::is_opener(text[k])) {
                ++k;
            }
            boundary = k == n || unicode::is_upper(text[k]) || unicode::is_digit(text[k]);
        }
        if (boundary && run_end - i == 1 && text[i] == U'.' && detail::is_protected(text, i)) {
            boundary = false;
        }
        if (boundary) {
            emit(start, run_end);
            start = run_end;
        }
        i = run_end;
    }
    emit(start, n);
    return sentences;
}

}  // namespace dupforge
