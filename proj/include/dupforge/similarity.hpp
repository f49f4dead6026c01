#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dupforge/corpus.hpp"
#include "dupforge/fuzzy.hpp"
#include "dupforge/unicode.hpp"

namespace dupforge {

enum class Metric {
    exact,
    sentence_jaccard,
    shingle_jaccard,
    indel_ratio,
    partial_ratio,
    token_sort_ratio,
    lsh_estimate,
    bm25
};

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::exact: return "exact";
    case Metric::sentence_jaccard: return "sentence_jaccard";
    case Metric::shingle_jaccard: return "shingle_jaccard";
    case Metric::indel_ratio: return "indel_ratio";
    case Metric::partial_ratio: return "partial_ratio";
    case Metric::token_sort_ratio: return "token_sort_ratio";
    case Metric::lsh_estimate: return "lsh_estimate";
    case Metric::bm25: return "bm25";
    }
    return "exact";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
    for (auto m : {Metric::exact, Metric::sentence_jaccard, Metric::shingle_jaccard, Metric::indel_ratio,
                   Metric::partial_ratio, Metric::token_sort_ratio, Metric::lsh_estimate, Metric::bm25}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    return std::nullopt;
}

/// Upper end of a metric's scale; bm25 is unbounded above.
inline double scale_max(Metric m) {
    switch (m) {
    case Metric::indel_ratio:
    case Metric::partial_ratio:
    case Metric::token_sort_ratio: return 100.0;
    case Metric::bm25: return std::numeric_limits<double>::infinity();
    default: return 1.0;
    }
}

struct SimilarityScore {
    Metric metric = Metric::exact;
    double value = 0.0;

    [[nodiscard]] bool in_scale() const { return value >= 0.0 && value <= scale_max(metric); }
    bool operator==(SimilarityScore const&) const = default;
};

/// Search-1 canonical form: punctuation (P*) and numerals (N*) removed,
/// lowercased, whitespace re-collapsed. Fewer than 20 words gives nullopt.
inline std::optional<std::string> canonical_exact_form(std::string_view normalized, std::size_t min_words = 20) {
    auto const text = unicode::to_u32(normalized);
    std::string out;
    out.reserve(normalized.size());
    std::size_t words = 0;
    bool pending_space = false;
    for (char32_t c : text) {
        if (unicode::is_punct(c) || unicode::is_numeric(c)) {
            continue;
        }
        if (unicode::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space || out.empty()) {
            if (!out.empty()) {
                out.push_back(' ');
            }
            ++words;
            pending_space = false;
        }
        unicode::append_utf8(out, unicode::to_lower(c));
    }
    if (words < min_words) {
        return std::nullopt;
    }
    return out;
}

namespace detail {

template <typename T>
double sorted_jaccard(std::vector<T> const& a, std::vector<T> const& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    std::size_t const uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

/// |unique shared sentences| / |unique sentences of either|; 0 for an empty union.
inline SimilarityScore sentence_jaccard(std::vector<std::string> const& a, std::vector<std::string> const& b) {
    return {Metric::sentence_jaccard, detail::sorted_jaccard(detail::sorted_unique(a), detail::sorted_unique(b))};
}

inline SimilarityScore sentence_jaccard(Comment const& a, Comment const& b) {
    return sentence_jaccard(a.sentences, b.sentences);
}

/// Sentences (in order of first appearance in `a`) that also occur in `b`.
inline std::vector<std::string> shared_sentences(std::vector<std::string> const& a,
                                                 std::vector<std::string> const& b) {
    auto const bs = detail::sorted_unique(b);
    std::vector<std::string> out;
    for (auto const& s : a) {
        if (std::binary_search(bs.begin(), bs.end(), s) && std::find(out.begin(), out.end(), s) == out.end()) {
            out.push_back(s);
        }
    }
    return out;
}

/// Set of contiguous k-code-point substrings, kept sorted and unique.
struct ShingleSet {
    std::size_t k = 5;
    std::vector<std::u32string> shingles;

    [[nodiscard]] std::size_t size() const noexcept { return shingles.size(); }
    [[nodiscard]] bool empty() const noexcept { return shingles.empty(); }
    [[nodiscard]] bool contains(std::u32string_view s) const {
        return std::binary_search(shingles.begin(), shingles.end(), s,
                                  [](auto const& x, auto const& y) { return std::u32string_view(x) < y; });
    }
};

inline ShingleSet shingles(std::u32string_view text, std::size_t k = 5) {
    ShingleSet set;
    set.k = k;
    if (k == 0 || text.size() < k) {
        return set;
    }
    set.shingles.reserve(text.size() - k + 1);
    for (std::size_t i = 0; i + k <= text.size(); ++i) {
        set.shingles.emplace_back(text.substr(i, k));
    }
    set.shingles = detail::sorted_unique(std::move(set.shingles));
    return set;
}

inline ShingleSet shingles(std::string_view text, std::size_t k = 5) { return shingles(unicode::to_u32(text), k); }

inline SimilarityScore shingle_jaccard(ShingleSet const& a, ShingleSet const& b) {
    return {Metric::shingle_jaccard, detail::sorted_jaccard(a.shingles, b.shingles)};
}

/// Shingles of up to six code points packed losslessly into 128-bit keys
/// (21 bits per code point), sorted and unique. Same set semantics as
/// shingles() at a fraction of the memory.
using PackedShingle = unsigned __int128;

inline constexpr std::size_t max_packed_shingle = 6;

inline std::vector<PackedShingle> packed_shingles(std::u32string_view text, std::size_t k = 5) {
    if (k == 0 || k > max_packed_shingle) {
        throw std::invalid_argument("packed shingles need 1 <= k <= 6");
    }
    std::vector<PackedShingle> out;
    if (text.size() < k) {
        return out;
    }
    out.reserve(text.size() - k + 1);
    for (std::size_t i = 0; i + k <= text.size(); ++i) {
        PackedShingle key = 0;
        for (std::size_t j = 0; j < k; ++j) {
            key = (key << 21) | static_cast<PackedShingle>(text[i + j] & 0x1FFFFF);
        }
        out.push_back(key);
    }
    return detail::sorted_unique(std::move(out));
}

inline SimilarityScore packed_shingle_jaccard(std::vector<PackedShingle> const& a,
                                              std::vector<PackedShingle> const& b) {
    return {Metric::shingle_jaccard, detail::sorted_jaccard(a, b)};
}

inline SimilarityScore fuzzy_score(std::u32string_view a, std::u32string_view b, Metric metric) {
    switch (metric) {
    case Metric::indel_ratio: return {metric, fuzzy::indel_ratio(a, b)};
    case Metric::partial_ratio: return {metric, fuzzy::partial_ratio(a, b)};
    case Metric::token_sort_ratio: return {metric, fuzzy::token_sort_ratio(a, b)};
    default: throw std::invalid_argument("fuzzy_score: not a ratio metric");
    }
}

inline SimilarityScore fuzzy_score(std::string_view a, std::string_view b, Metric metric) {
    return fuzzy_score(unicode::to_u32(a), unicode::to_u32(b), metric);
}

}  // namespace dupforge
