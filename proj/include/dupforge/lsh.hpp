#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dupforge/minhash.hpp"

// Banded LSH index over MinHash signatures.
//
// Binary file layout (all integers little-endian):
//
//   offset  size  field
//   0       8     magic "DFLSH\0\0\0"
//   8       4     u32 version (1)
//   12      4     u32 num_perm
//   16      8     u64 seed
//   24      4     u32 bands
//   28      4     u32 rows
//   32      8     f64 threshold
//   40      8     u64 document count n
//   then    n x   { u32 id length, id bytes, u8 empty-set flag }
//   then    bands x { u64 bucket count, buckets sorted by key:
//                     { u64 band hash, u32 member count, u32 doc numbers... } }

namespace dupforge {

static_assert(std::endian::native == std::endian::little, "index files assume a little-endian host");

struct LshParams {
    std::size_t bands = 0;
    std::size_t rows = 0;
};

namespace detail {

template <typename F>
double simpson(F f, double lo, double hi, std::size_t intervals = 2000) {
    double const h = (hi - lo) / static_cast<double>(intervals);
    double sum = f(lo) + f(hi);
    for (std::size_t i = 1; i < intervals; ++i) {
        sum += f(lo + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

}  // namespace detail

/// Banding that minimizes the weighted areas of false positives below and
/// false negatives above `threshold` under the S-curve 1 - (1 - s^r)^b,
/// searched over all b * r <= num_perm.
inline LshParams optimal_lsh_params(double threshold, std::size_t num_perm, double fp_weight = 0.5,
                                    double fn_weight = 0.5) {
    double best = std::numeric_limits<double>::infinity();
    LshParams params;
    for (std::size_t b = 1; b <= num_perm; ++b) {
        for (std::size_t r = 1; r <= num_perm / b; ++r) {
            auto const curve = [b, r](double s) {
                return 1.0 - std::pow(1.0 - std::pow(s, static_cast<double>(r)), static_cast<double>(b));
            };
            double const fp = detail::simpson(curve, 0.0, threshold);
            double const fn = detail::simpson([&](double s) { return 1.0 - curve(s); }, threshold, 1.0);
            double const err = fp_weight * fp + fn_weight * fn;
            if (err < best) {
                best = err;
                params = {b, r};
            }
        }
    }
    return params;
}

/// optimal_lsh_params() memoized per (threshold, num_perm).
inline LshParams cached_lsh_params(double threshold, std::size_t num_perm) {
    static std::mutex mutex;
    static std::map<std::pair<double, std::size_t>, LshParams> cache;
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.try_emplace({threshold, num_perm});
    if (inserted) {
        it->second = optimal_lsh_params(threshold, num_perm);
    }
    return it->second;
}

class LshIndex {
public:
    static constexpr std::uint32_t format_version = 1;

    LshIndex() = default;

    LshIndex(std::size_t num_perm, std::uint64_t seed, double threshold = 0.5)
        : LshIndex(num_perm, seed, threshold, cached_lsh_params(threshold, num_perm)) {}

    LshIndex(std::size_t num_perm, std::uint64_t seed, double threshold, LshParams params)
        : num_perm_(num_perm), seed_(seed), threshold_(threshold), params_(params), buckets_(params.bands) {
        if (params.bands == 0 || params.rows == 0 || params.bands * params.rows > num_perm) {
            throw std::invalid_argument("invalid LSH banding");
        }
    }

    [[nodiscard]] std::size_t num_perm() const noexcept { return num_perm_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] double threshold() const noexcept { return threshold_; }
    [[nodiscard]] LshParams params() const noexcept { return params_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] std::string const& id(std::size_t doc) const { return ids_[doc]; }

    /// Documents are numbered in insertion order. Empty-set signatures are
    /// recorded but placed in no bucket.
    std::size_t insert(MinHashSignature const& sig) {
        check(sig);
        auto const doc = static_cast<std::uint32_t>(ids_.size());
        ids_.push_back(sig.source_id);
        empty_.push_back(sig.is_empty_set());
        if (!sig.is_empty_set()) {
            for (std::size_t band = 0; band < params_.bands; ++band) {
                buckets_[band][band_hash(sig, band)].push_back(doc);
            }
        }
        return doc;
    }

    /// Document numbers sharing at least one band with `sig`, sorted, with
    /// `self` (if given) removed.
    [[nodiscard]] std::vector<std::uint32_t> query_docs(MinHashSignature const& sig,
                                                        std::size_t self = static_cast<std::size_t>(-1)) const {
        check(sig);
        std::vector<std::uint32_t> out;
        if (sig.is_empty_set()) {
            return out;
        }
        for (std::size_t band = 0; band < params_.bands; ++band) {
            auto it = buckets_[band].find(band_hash(sig, band));
            if (it != buckets_[band].end()) {
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        if (self != static_cast<std::size_t>(-1)) {
            std::erase(out, static_cast<std::uint32_t>(self));
        }
        return out;
    }

    /// Ids of candidates, the query's own id excluded.
    [[nodiscard]] std::vector<std::string> query(MinHashSignature const& sig) const {
        std::vector<std::string> out;
        for (auto doc : query_docs(sig)) {
            if (ids_[doc] != sig.source_id) {
                out.push_back(ids_[doc]);
            }
        }
        return out;
    }

    /// Number of buckets holding `doc`; b for every non-empty signature.
    [[nodiscard]] std::size_t bucket_count_of(std::size_t doc) const {
        std::size_t n = 0;
        for (auto const& band : buckets_) {
            for (auto const& [key, docs] : band) {
                n += static_cast<std::size_t>(std::count(docs.begin(), docs.end(), doc));
            }
        }
        return n;
    }

    void save(std::filesystem::path const& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out.write("DFLSH\0\0\0", 8);
        put<std::uint32_t>(out, format_version);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(num_perm_));
        put<std::uint64_t>(out, seed_);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.bands));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.rows));
        put<double>(out, threshold_);
        put<std::uint64_t>(out, ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(ids_[i].size()));
            out.write(ids_[i].data(), static_cast<std::streamsize>(ids_[i].size()));
            put<std::uint8_t>(out, empty_[i] ? 1 : 0);
        }
        for (auto const& band : buckets_) {
            std::vector<std::uint64_t> keys;
            keys.reserve(band.size());
            for (auto const& [key, docs] : band) {
                keys.push_back(key);
            }
            std::sort(keys.begin(), keys.end());
            put<std::uint64_t>(out, keys.size());
            for (auto key : keys) {
                auto const& docs = band.at(key);
                put<std::uint64_t>(out, key);
                put<std::uint32_t>(out, static_cast<std::uint32_t>(docs.size()));
                for (auto d : docs) {
                    put<std::uint32_t>(out, d);
                }
            }
        }
        if (!out) {
            throw std::runtime_error("write failed: " + path.string());
        }
    }

    static LshIndex load(std::filesystem::path const& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("cannot read " + path.string());
        }
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, "DFLSH\0\0\0", 8) != 0) {
            throw std::runtime_error("not an LSH index file: " + path.string());
        }
        if (get<std::uint32_t>(in) != format_version) {
            throw std::runtime_error("unsupported LSH index version");
        }
        auto const num_perm = get<std::uint32_t>(in);
        auto const seed = get<std::uint64_t>(in);
        LshParams p;
        p.bands = get<std::uint32_t>(in);
        p.rows = get<std::uint32_t>(in);
        auto const threshold = get<double>(in);
        LshIndex index(num_perm, seed, threshold, p);
        auto const n = get<std::uint64_t>(in);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string id(get<std::uint32_t>(in), '\0');
            in.read(id.data(), static_cast<std::streamsize>(id.size()));
            index.ids_.push_back(std::move(id));
            index.empty_.push_back(get<std::uint8_t>(in) != 0);
        }
        for (auto& band : index.buckets_) {
            auto const count = get<std::uint64_t>(in);
            band.reserve(count);
            for (std::uint64_t k = 0; k < count; ++k) {
                auto const key = get<std::uint64_t>(in);
                std::vector<std::uint32_t> docs(get<std::uint32_t>(in));
                for (auto& d : docs) {
                    d = get<std::uint32_t>(in);
                }
                band.emplace(key, std::move(docs));
            }
        }
        if (!in) {
            throw std::runtime_error("truncated LSH index file: " + path.string());
        }
        return index;
    }

private:
    void check(MinHashSignature const& sig) const {
        if (sig.num_perm() != num_perm_) {
            throw std::invalid_argument("signature num_perm " + std::to_string(sig.num_perm()) +
                                        " does not match index num_perm " + std::to_string(num_perm_));
        }
    }

    [[nodiscard]] std::uint64_t band_hash(MinHashSignature const& sig, std::size_t band) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ band;
        for (std::size_t i = band * params_.rows; i < (band + 1) * params_.rows; ++i) {
            h = fmix64(h ^ sig.values[i]) + 0x9e3779b97f4a7c15ULL;
        }
        return h;
    }

    template <typename T>
    static void put(std::ostream& out, T v) {
        out.write(reinterpret_cast<char const*>(&v), sizeof(T));
    }

    template <typename T>
    static T get(std::istream& in) {
        T v{};
        in.read(reinterpret_cast<char*>(&v), sizeof(T));
        return v;
    }

    std::size_t num_perm_ = 128;
    std::uint64_t seed_ = 1;
    double threshold_ = 0.5;
    LshParams params_;
    std::vector<std::string> ids_;
    std::vector<bool> empty_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> buckets_;
};

/// Builds an index over `signatures` in order.
inline LshIndex lsh_build(std::vector<MinHashSignature> const& signatures, double threshold = 0.5,
                          std::uint64_t seed = 1) {
    std::size_t const num_perm = signatures.empty() ? 128 : signatures.front().num_perm();
    LshIndex index(num_perm, seed, threshold);
    for (auto const& s : signatures) {
        index.insert(s);
    }
    return index;
}

}  // namespace dupforge
