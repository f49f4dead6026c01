#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dupforge/unicode.hpp"

// Indel-based string ratios over code points.
//
//   indel_ratio      = 100 * 2 * LCS(a, b) / (|a| + |b|)
//   partial_ratio    = max over every window w of the longer string with
//                      |w| = |shorter| of indel_ratio(shorter, w)
//   token_sort_ratio = indel_ratio after lowercasing, splitting on
//                      whitespace, sorting tokens and re-joining
//
// Both inputs empty scores 100, exactly one empty scores 0.

namespace dupforge::fuzzy {

/// Per-character match bitmasks of a pattern, split into 64-bit blocks.
class PatternMatchVector {
public:
    explicit PatternMatchVector(std::u32string_view pattern)
        : blocks_((pattern.size() + 63) / 64), ascii_(blocks_ * 128, 0) {
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            auto* row = mutable_row(pattern[i]);
            row[i / 64] |= uint64_t{1} << (i % 64);
        }
    }

    [[nodiscard]] std::size_t blocks() const noexcept { return blocks_; }

    [[nodiscard]] uint64_t const* row(char32_t c) const noexcept {
        if (c < 128) {
            return &ascii_[c * blocks_];
        }
        auto it = other_.find(c);
        return it == other_.end() ? nullptr : it->second.data();
    }

private:
    uint64_t* mutable_row(char32_t c) {
        if (c < 128) {
            return &ascii_[c * blocks_];
        }
        auto& v = other_[c];
        v.resize(blocks_, 0);
        return v.data();
    }

    std::size_t blocks_;
    std::vector<uint64_t> ascii_;
    std::unordered_map<char32_t, std::vector<uint64_t>> other_;
};

/// LCS length of the pattern behind `pm` (length m) and `text`, using the
/// bit-parallel recurrence V' = (V + (V & M)) | (V & ~M).
inline std::size_t lcs_length(PatternMatchVector const& pm, std::size_t m, std::u32string_view text) {
    std::size_t const nb = pm.blocks();
    if (m == 0 || text.empty()) {
        return 0;
    }
    std::vector<uint64_t> v(nb, ~uint64_t{0});
    for (char32_t c : text) {
        uint64_t const* match = pm.row(c);
        if (match == nullptr) {
            continue;
        }
        uint64_t carry = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            uint64_t const u = v[b] & match[b];
            uint64_t const x = v[b] + u;
            uint64_t const sum = x + carry;
            uint64_t const next_carry = static_cast<uint64_t>(x < v[b]) | static_cast<uint64_t>(sum < x);
            v[b] = sum | (v[b] - u);
            carry = next_carry;
        }
    }
    std::size_t zeros = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        uint64_t word = ~v[b];
        std::size_t const bits = (b + 1 == nb && m % 64 != 0) ? m % 64 : 64;
        if (bits < 64) {
            word &= (uint64_t{1} << bits) - 1;
        }
        zeros += static_cast<std::size_t>(std::popcount(word));
    }
    return zeros;
}

inline std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
    if (a.size() > b.size()) {
        std::swap(a, b);
    }
    if (a.empty()) {
        return 0;
    }
    PatternMatchVector const pm(a);
    return lcs_length(pm, a.size(), b);
}

inline double ratio_from_lcs(std::size_t lcs, std::size_t len_a, std::size_t len_b) {
    if (len_a + len_b == 0) {
        return 100.0;
    }
    return 100.0 * 2.0 * static_cast<double>(lcs) / static_cast<double>(len_a + len_b);
}

inline double indel_ratio(std::u32string_view a, std::u32string_view b) {
    if (a.empty() || b.empty()) {
        return a.empty() && b.empty() ? 100.0 : 0.0;
    }
    return ratio_from_lcs(lcs_length(a, b), a.size(), b.size());
}

/// LCS(shorter, window) for every window of `longer` of length |shorter|,
/// via seaweed combing: LCS(a, b[l, r)) = (r - l) minus the number of
/// seaweeds that enter at the top and leave at the bottom inside [l, r).
///
/// Cells are swept by anti-diagonal. Cells on one diagonal are independent,
/// and with `longer` and the vertical seaweeds stored reversed both operands
/// are contiguous, so the inner loop vectorizes.
inline std::vector<std::size_t> window_lcs(std::u32string_view shorter, std::u32string_view longer) {
    std::size_t const m = shorter.size();
    std::size_t const n = longer.size();
    std::vector<std::size_t> out;
    if (m == 0 || n < m) {
        return out;
    }
    std::size_t const windows = n - m + 1;
    std::vector<int32_t> h(m);
    std::vector<int32_t> a(m);
    std::vector<int32_t> v_rev(n);
    std::vector<int32_t> b_rev(n);
    for (std::size_t i = 0; i < m; ++i) {
        h[i] = static_cast<int32_t>(i);
        a[i] = static_cast<int32_t>(shorter[i]);
    }
    for (std::size_t k = 0; k < n; ++k) {
        v_rev[k] = static_cast<int32_t>(m + n - 1 - k);
        b_rev[k] = static_cast<int32_t>(longer[n - 1 - k]);
    }
    for (std::size_t d = 0; d + 1 < m + n; ++d) {
        std::size_t const lo = d + 1 > n ? d + 1 - n : 0;
        std::size_t const hi = std::min(m - 1, d);
        int32_t* __restrict hp = h.data();
        int32_t const* __restrict ap = a.data();
        int32_t* __restrict vp = v_rev.data() + (n - 1 - d);
        int32_t const* __restrict bp = b_rev.data() + (n - 1 - d);
        for (std::size_t i = lo; i <= hi; ++i) {
            int32_t const hv = hp[i];
            int32_t const vv = vp[i];
            int32_t const turn = -static_cast<int32_t>((ap[i] == bp[i]) | (hv > vv));
            hp[i] = (vv & turn) | (hv & ~turn);
            vp[i] = (hv & turn) | (vv & ~turn);
        }
    }
    // Seaweed ending at bottom j from top column o is counted by every
    // window start l with max(j, o) - m + 1 <= l <= min(j, o).
    std::vector<long> diff(windows + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
        auto const vj = static_cast<std::size_t>(v_rev[n - 1 - j]);
        if (vj < m) {
            continue;
        }
        std::size_t const o = vj - m;
        long const hi = static_cast<long>(std::min(j, o));
        long const lo = static_cast<long>(std::max(j, o)) - static_cast<long>(m) + 1;
        long const from = std::max(lo, 0L);
        long const to = std::min(hi, static_cast<long>(windows) - 1);
        if (from <= to) {
            diff[static_cast<std::size_t>(from)] += 1;
            diff[static_cast<std::size_t>(to) + 1] -= 1;
        }
    }
    out.resize(windows);
    long running = 0;
    for (std::size_t l = 0; l < windows; ++l) {
        running += diff[l];
        out[l] = m - static_cast<std::size_t>(running);
    }
    return out;
}

inline double partial_ratio(std::u32string_view a, std::u32string_view b) {
    if (a.empty() || b.empty()) {
        return a.empty() && b.empty() ? 100.0 : 0.0;
    }
    if (a.size() > b.size()) {
        std::swap(a, b);
    }
    std::size_t const m = a.size();
    std::size_t const windows = b.size() - m + 1;
    std::size_t best = 0;
    // Per-window bit-parallel LCS costs about windows * m * ceil(m / 64)
    // word operations; combing costs m * n cell updates, a few per word op.
    std::size_t const blocks = (m + 63) / 64;
    if (windows * blocks * 3 <= b.size()) {
        PatternMatchVector const pm(a);
        for (std::size_t l = 0; l < windows && best < m; ++l) {
            best = std::max(best, lcs_length(pm, m, b.substr(l, m)));
        }
    } else if (b.find(a) != std::u32string_view::npos) {
        best = m;
    } else {
        auto const per_window = window_lcs(a, b);
        best = *std::max_element(per_window.begin(), per_window.end());
    }
    return ratio_from_lcs(best, m, m);
}

inline std::u32string sorted_tokens(std::u32string_view s) {
    std::vector<std::u32string> tokens;
    std::u32string cur;
    for (char32_t c : s) {
        if (unicode::is_space(c)) {
            if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(unicode::to_lower(c));
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    std::sort(tokens.begin(), tokens.end());
    std::u32string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out.push_back(U' ');
        }
        out += tokens[i];
    }
    return out;
}

inline double token_sort_ratio(std::u32string_view a, std::u32string_view b) {
    return indel_ratio(sorted_tokens(a), sorted_tokens(b));
}

// UTF-8 conveniences.
inline double indel_ratio(std::string_view a, std::string_view b) {
    return indel_ratio(unicode::to_u32(a), unicode::to_u32(b));
}
inline double partial_ratio(std::string_view a, std::string_view b) {
    return partial_ratio(unicode::to_u32(a), unicode::to_u32(b));
}
inline double token_sort_ratio(std::string_view a, std::string_view b) {
    return token_sort_ratio(unicode::to_u32(a), unicode::to_u32(b));
}

}  // namespace dupforge::fuzzy
