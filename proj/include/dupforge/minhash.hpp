#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dupforge/similarity.hpp"

// MinHash over character shingles.
//
// Each shingle is reduced to a 64-bit base hash x (FNV-1a over the code
// points as 4-byte little-endian units, then the murmur3 fmix64 finalizer).
// Permutation i is the universal hash h_i(x) = (a_i * x + b_i) mod p with
// p = 2^61 - 1, a_i in [1, p) and b_i in [0, p) drawn from mt19937_64(seed).

namespace dupforge {

inline constexpr std::uint64_t mersenne61 = (std::uint64_t{1} << 61) - 1;

/// Value of every component of the signature of an empty shingle set. It is
/// outside the range of h_i, so it never equals a real minimum.
inline constexpr std::uint64_t empty_signature_value = std::numeric_limits<std::uint64_t>::max();

inline std::uint64_t fmix64(std::uint64_t k) noexcept {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ULL;
    k ^= k >> 33;
    return k;
}

inline std::uint64_t shingle_hash(std::u32string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char32_t c : s) {
        auto v = static_cast<std::uint32_t>(c);
        for (int i = 0; i < 4; ++i) {
            h ^= (v >> (8 * i)) & 0xFFu;
            h *= 0x100000001b3ULL;
        }
    }
    return fmix64(h);
}

namespace detail {

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) noexcept {
    auto const prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t const lo = static_cast<std::uint64_t>(prod) & mersenne61;
    std::uint64_t const hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t r = lo + hi;
    if (r >= mersenne61) {
        r -= mersenne61;
    }
    return r;
}

}  // namespace detail

/// Sorted, unique base hashes of the k-shingles of a text.
inline std::vector<std::uint64_t> shingle_hashes(std::u32string_view text, std::size_t k = 5) {
    std::vector<std::uint64_t> out;
    if (k == 0 || text.size() < k) {
        return out;
    }
    out.reserve(text.size() - k + 1);
    for (std::size_t i = 0; i + k <= text.size(); ++i) {
        out.push_back(shingle_hash(text.substr(i, k)));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::uint64_t> shingle_hashes(ShingleSet const& set) {
    std::vector<std::uint64_t> out;
    out.reserve(set.size());
    for (auto const& s : set.shingles) {
        out.push_back(shingle_hash(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct MinHashSignature {
    std::string source_id;
    std::vector<std::uint64_t> values;

    [[nodiscard]] std::size_t num_perm() const noexcept { return values.size(); }
    [[nodiscard]] bool is_empty_set() const noexcept {
        return !values.empty() && values.front() == empty_signature_value;
    }
};

class MinHasher {
public:
    explicit MinHasher(std::size_t num_perm = 128, std::uint64_t seed = 1) : seed_(seed), a_(num_perm), b_(num_perm) {
        if (num_perm < 16) {
            throw std::invalid_argument("num_perm must be at least 16");
        }
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < num_perm; ++i) {
            a_[i] = rng() % (mersenne61 - 1) + 1;
            b_[i] = rng() % mersenne61;
        }
    }

    [[nodiscard]] std::size_t num_perm() const noexcept { return a_.size(); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// `hashes` are base hashes as produced by shingle_hashes().
    [[nodiscard]] MinHashSignature signature(std::vector<std::uint64_t> const& hashes, std::string id = {}) const {
        MinHashSignature sig{std::move(id), std::vector<std::uint64_t>(a_.size(), empty_signature_value)};
        if (hashes.empty()) {
            return sig;
        }
        auto* v = sig.values.data();
        std::size_t const n = a_.size();
        for (std::uint64_t h : hashes) {
            std::uint64_t const x = h % mersenne61;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t y = detail::mulmod61(a_[i], x) + b_[i];
                if (y >= mersenne61) {
                    y -= mersenne61;
                }
                v[i] = std::min(v[i], y);
            }
        }
        return sig;
    }

    [[nodiscard]] MinHashSignature signature(ShingleSet const& set, std::string id = {}) const {
        return signature(shingle_hashes(set), std::move(id));
    }

private:
    std::uint64_t seed_;
    std::vector<std::uint64_t> a_;
    std::vector<std::uint64_t> b_;
};

/// Fraction of equal components. Empty-set signatures estimate 0 against
/// everything, themselves included.
inline double estimate_jaccard(MinHashSignature const& a, MinHashSignature const& b) {
    if (a.num_perm() != b.num_perm()) {
        throw std::invalid_argument("signatures differ in num_perm");
    }
    if (a.values.empty() || a.is_empty_set() || b.is_empty_set()) {
        return 0.0;
    }
    std::size_t eq = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        eq += a.values[i] == b.values[i];
    }
    return static_cast<double>(eq) / static_cast<double>(a.values.size());
}

}  // namespace dupforge
