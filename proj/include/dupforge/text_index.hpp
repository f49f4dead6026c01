#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dupforge/corpus.hpp"
#include "dupforge/unicode.hpp"

// In-memory inverted index with BM25 ranking.
//
//   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//   score(q, d) = sum over query terms t of
//                 qtf(t) * idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
//
// Query terms are summed in ascending term-id order so that every scoring
// path produces bit-identical results.
//
// Binary file layout (little-endian):
//
//   0    8   magic "DFIDX\0\0\0"
//   8    4   u32 version (1)
//   12   1   u8 granularity (0 comment, 1 sentence)
//   13   8   f64 k1
//   21   8   f64 b
//   29   8   u64 document count n
//   then n x { str id, u32 length, [sentence only: str comment_id, str referee_uid, u32 ordinal] }
//   then u64 term count, terms in id order x { str term, u32 df, df x { u32 doc, u32 tf } }
//
// where str is a u32 byte length followed by UTF-8 bytes.

namespace dupforge {

enum class Granularity { comment, sentence };

/// Lowercase and split on anything that is not a letter or digit.
inline std::vector<std::string> analyze(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char32_t c : unicode::to_u32(text)) {
        if (unicode::is_alnum(c)) {
            unicode::append_utf8(current, unicode::to_lower(c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        out.push_back(std::move(current));
    }
    return out;
}

struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
    bool operator==(Posting const&) const = default;
};

struct SentenceRef {
    std::string comment_id;
    std::string referee_uid;
    std::uint32_t ordinal = 0;
};

struct Hit {
    std::uint32_t doc;
    double score;
    bool operator==(Hit const&) const = default;
};

struct IndexDocument {
    std::string id;
    std::string text;
    std::optional<SentenceRef> sentence;
};

class InvertedIndex {
public:
    static constexpr std::uint32_t format_version = 1;

    explicit InvertedIndex(Granularity g = Granularity::comment, double k1 = 1.2, double b = 0.75)
        : granularity_(g), k1_(k1), b_(b) {}

    /// Throws std::invalid_argument on a duplicate id.
    static InvertedIndex build(std::vector<IndexDocument> const& docs, Granularity g, double k1 = 1.2,
                               double b = 0.75) {
        InvertedIndex index(g, k1, b);
        index.ids_.reserve(docs.size());
        index.lengths_.reserve(docs.size());
        std::unordered_map<std::string, std::uint32_t> seen;
        std::unordered_map<std::uint32_t, std::uint32_t> tf;
        for (auto const& d : docs) {
            auto const doc = static_cast<std::uint32_t>(index.ids_.size());
            if (!seen.emplace(d.id, doc).second) {
                throw std::invalid_argument("duplicate document id: " + d.id);
            }
            index.ids_.push_back(d.id);
            if (g == Granularity::sentence) {
                index.sentences_.push_back(d.sentence.value_or(SentenceRef{}));
            }
            auto const tokens = analyze(d.text);
            index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
            tf.clear();
            std::vector<std::uint32_t> order;
            for (auto const& t : tokens) {
                auto const id = index.intern(t);
                if (tf[id]++ == 0) {
                    order.push_back(id);
                }
            }
            for (auto id : order) {
                index.postings_[id].push_back({doc, tf[id]});
            }
        }
        index.finish();
        return index;
    }

    [[nodiscard]] Granularity granularity() const noexcept { return granularity_; }
    [[nodiscard]] double k1() const noexcept { return k1_; }
    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] std::size_t doc_count() const noexcept { return ids_.size(); }
    [[nodiscard]] std::size_t term_count() const noexcept { return terms_.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return avgdl_; }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t doc) const { return lengths_[doc]; }
    [[nodiscard]] std::string const& id(std::uint32_t doc) const { return ids_[doc]; }
    [[nodiscard]] SentenceRef const& sentence(std::uint32_t doc) const { return sentences_.at(doc); }

    [[nodiscard]] std::optional<std::uint32_t> term_id(std::string const& term) const {
        auto it = dictionary_.find(term);
        if (it == dictionary_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::vector<Posting> const& postings(std::string const& term) const {
        static std::vector<Posting> const none;
        auto id = term_id(term);
        return id ? postings_[*id] : none;
    }

    [[nodiscard]] double idf(std::uint32_t term) const {
        double const n = static_cast<double>(ids_.size());
        double const df = static_cast<double>(postings_[term].size());
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    /// Query terms known to the index with their query frequency, in
    /// ascending term-id order.
    struct QueryTerm {
        std::uint32_t term;
        std::uint32_t qtf;
        double weight;  // qtf * idf
    };

    [[nodiscard]] std::vector<QueryTerm> prepare(std::string_view text) const {
        std::vector<std::uint32_t> ids;
        for (auto const& t : analyze(text)) {
            if (auto id = term_id(t)) {
                ids.push_back(*id);
            }
        }
        std::sort(ids.begin(), ids.end());
        std::vector<QueryTerm> out;
        for (std::size_t i = 0; i < ids.size();) {
            std::size_t j = i;
            while (j < ids.size() && ids[j] == ids[i]) {
                ++j;
            }
            auto const qtf = static_cast<std::uint32_t>(j - i);
            out.push_back({ids[i], qtf, qtf * idf(ids[i])});
            i = j;
        }
        return out;
    }

    /// BM25 score of one document, straight from the postings.
    [[nodiscard]] double score(std::vector<QueryTerm> const& query, std::uint32_t doc) const {
        double s = 0;
        for (auto const& q : query) {
            auto const& p = postings_[q.term];
            auto it = std::lower_bound(p.begin(), p.end(), doc,
                                       [](Posting const& x, std::uint32_t d) { return x.doc < d; });
            if (it != p.end() && it->doc == doc) {
                s += q.weight * tf_part(it->tf, doc);
            }
        }
        return s;
    }

    [[nodiscard]] double score(std::string_view text, std::uint32_t doc) const { return score(prepare(text), doc); }

    /// Top `top_k` documents by score descending, ties by ascending doc.
    /// Documents with score 0 are never returned.
    [[nodiscard]] std::vector<Hit> query(std::string_view text, std::size_t top_k) const {
        if (top_k == 0) {
            throw std::invalid_argument("top_k must be at least 1");
        }
        return max_score(prepare(text), top_k, 0.0);
    }

    /// Every document scoring at least `min_score` (> 0), ordered as query().
    [[nodiscard]] std::vector<Hit> query_min_score(std::vector<QueryTerm> const& query, double min_score) const {
        return max_score(query, 0, min_score);
    }

    /// Reference implementation: term-at-a-time accumulation over the full
    /// postings, sorted. Used to check the pruned paths.
    [[nodiscard]] std::vector<Hit> exhaustive(std::string_view text) const {
        auto const query = prepare(text);
        std::vector<double> acc(ids_.size(), 0.0);
        std::vector<bool> touched(ids_.size(), false);
        for (auto const& q : query) {
            for (auto const& p : postings_[q.term]) {
                acc[p.doc] += q.weight * tf_part(p.tf, p.doc);
                touched[p.doc] = true;
            }
        }
        std::vector<Hit> out;
        for (std::uint32_t d = 0; d < acc.size(); ++d) {
            if (touched[d] && acc[d] > 0) {
                out.push_back({d, acc[d]});
            }
        }
        std::sort(out.begin(), out.end(), better);
        return out;
    }

    void save(std::filesystem::path const& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out.write("DFIDX\0\0\0", 8);
        put<std::uint32_t>(out, format_version);
        put<std::uint8_t>(out, granularity_ == Granularity::sentence ? 1 : 0);
        put<double>(out, k1_);
        put<double>(out, b_);
        put<std::uint64_t>(out, ids_.size());
        for (std::size_t d = 0; d < ids_.size(); ++d) {
            put_str(out, ids_[d]);
            put<std::uint32_t>(out, lengths_[d]);
            if (granularity_ == Granularity::sentence) {
                put_str(out, sentences_[d].comment_id);
                put_str(out, sentences_[d].referee_uid);
                put<std::uint32_t>(out, sentences_[d].ordinal);
            }
        }
        put<std::uint64_t>(out, terms_.size());
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            put_str(out, terms_[t]);
            put<std::uint32_t>(out, static_cast<std::uint32_t>(postings_[t].size()));
            for (auto const& p : postings_[t]) {
                put<std::uint32_t>(out, p.doc);
                put<std::uint32_t>(out, p.tf);
            }
        }
        if (!out) {
            throw std::runtime_error("write failed: " + path.string());
        }
    }

    static InvertedIndex load(std::filesystem::path const& path) {
        std::ifstream in(path, std::ios::binary);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, "DFIDX\0\0\0", 8) != 0) {
            throw std::runtime_error("not a text index file: " + path.string());
        }
        if (get<std::uint32_t>(in) != format_version) {
            throw std::runtime_error("unsupported text index version");
        }
        auto const g = get<std::uint8_t>(in) == 1 ? Granularity::sentence : Granularity::comment;
        auto const k1 = get<double>(in);
        auto const b = get<double>(in);
        InvertedIndex index(g, k1, b);
        auto const n = get<std::uint64_t>(in);
        for (std::uint64_t d = 0; d < n && in; ++d) {
            index.ids_.push_back(get_str(in));
            index.lengths_.push_back(get<std::uint32_t>(in));
            if (g == Granularity::sentence) {
                SentenceRef ref;
                ref.comment_id = get_str(in);
                ref.referee_uid = get_str(in);
                ref.ordinal = get<std::uint32_t>(in);
                index.sentences_.push_back(std::move(ref));
            }
        }
        auto const terms = get<std::uint64_t>(in);
        for (std::uint64_t t = 0; t < terms && in; ++t) {
            index.intern(get_str(in));
            auto& p = index.postings_.back();
            p.resize(get<std::uint32_t>(in));
            for (auto& x : p) {
                x.doc = get<std::uint32_t>(in);
                x.tf = get<std::uint32_t>(in);
            }
        }
        if (!in) {
            throw std::runtime_error("truncated text index file: " + path.string());
        }
        index.finish();
        return index;
    }

private:
    static bool better(Hit const& x, Hit const& y) { return x.score != y.score ? x.score > y.score : x.doc < y.doc; }

    std::uint32_t intern(std::string const& term) {
        auto [it, inserted] = dictionary_.emplace(term, static_cast<std::uint32_t>(terms_.size()));
        if (inserted) {
            terms_.push_back(term);
            postings_.emplace_back();
        }
        return it->second;
    }

    void finish() {
        double total = 0;
        for (auto l : lengths_) {
            total += l;
        }
        avgdl_ = lengths_.empty() ? 0.0 : total / static_cast<double>(lengths_.size());
        norm_.resize(lengths_.size());
        for (std::size_t d = 0; d < lengths_.size(); ++d) {
            norm_[d] = avgdl_ > 0 ? k1_ * (1.0 - b_ + b_ * lengths_[d] / avgdl_) : k1_;
        }
        max_tf_part_.assign(postings_.size(), 0.0);
        docs_.assign(postings_.size(), {});
        impacts_.assign(postings_.size(), {});
        for (std::size_t t = 0; t < postings_.size(); ++t) {
            docs_[t].reserve(postings_[t].size());
            impacts_[t].reserve(postings_[t].size());
            for (auto const& p : postings_[t]) {
                double const part = tf_part(p.tf, p.doc);
                docs_[t].push_back(p.doc);
                impacts_[t].push_back(static_cast<float>(part));
                max_tf_part_[t] = std::max(max_tf_part_[t], part);
            }
        }
    }

    [[nodiscard]] double tf_part(std::uint32_t tf, std::uint32_t doc) const {
        return tf * (k1_ + 1.0) / (tf + norm_[doc]);
    }

    // Term-at-a-time MaxScore. Terms are accumulated into a dense array in
    // decreasing order of their score bound. Once the bound of the terms left
    // cannot lift an unseen document to the entry threshold, the remaining
    // terms only update documents already seen. The survivors are rescored in
    // canonical term order so that scores match exhaustive() bit for bit.
    // With top_k > 0 the threshold is a lower bound on the k-th best score,
    // otherwise the fixed `min_score`. Bounds carry a small relative slack so
    // that rounding never prunes a qualifying document.
    [[nodiscard]] std::vector<Hit> max_score(std::vector<QueryTerm> const& query, std::size_t top_k,
                                             double min_score) const {
        std::vector<Hit> out;
        if (query.empty() || ids_.empty()) {
            return out;
        }
        std::vector<std::pair<double, std::size_t>> order;  // (bound, position in query)
        for (std::size_t i = 0; i < query.size(); ++i) {
            order.emplace_back(query[i].weight * max_tf_part_[query[i].term], i);
        }
        std::sort(order.begin(), order.end(), [](auto const& x, auto const& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        std::vector<double> rest(order.size() + 1, 0.0);  // rest[i]: bound of terms i.. onwards
        for (std::size_t i = order.size(); i-- > 0;) {
            rest[i] = rest[i + 1] + order[i].first;
        }
        // Accumulated impacts are single precision, good to about 1e-7.
        auto const slack = [](double x) { return x * (1.0 + 1e-6) + 1e-12; };
        bool const ranked = top_k > 0;

        auto& acc = scratch_acc();
        if (acc.size() < ids_.size()) {
            acc.resize(ids_.size(), 0.0);
        }
        auto& touched = scratch_touched();
        touched.clear();
        std::vector<double> kth_buffer;
        auto kth_lower_bound = [&] {
            if (touched.size() < top_k) {
                return 0.0;
            }
            kth_buffer.clear();
            for (auto d : touched) {
                kth_buffer.push_back(acc[d]);
            }
            auto nth = kth_buffer.begin() + static_cast<std::ptrdiff_t>(top_k - 1);
            std::nth_element(kth_buffer.begin(), nth, kth_buffer.end(), std::greater<>());
            // Partial sums may run a hair above the exact score.
            return *nth * (1.0 - 1e-6);
        };

        std::size_t i = 0;
        double theta = ranked ? 0.0 : min_score;
        double best = 0;
        std::size_t last_check = 0;
        for (; i < order.size(); ++i) {
            if (slack(rest[i]) < theta) {
                break;
            }
            auto const& q = query[order[i].second];
            auto const* impact = impacts_[q.term].data();
            auto const* docs = docs_[q.term].data();
            auto const n = docs_[q.term].size();
            for (std::size_t j = 0; j < n; ++j) {
                auto& a = acc[docs[j]];
                if (a == 0.0) {
                    touched.push_back(docs[j]);
                }
                a += q.weight * impact[j];
                best = std::max(best, a);
            }
            if (ranked && i + 1 < order.size() && slack(rest[i + 1]) < best &&
                (touched.size() < 4096 || touched.size() > 2 * last_check || i % 4 == 0)) {
                theta = std::max(theta, kth_lower_bound());
                last_check = touched.size();
            }
        }
        for (; i < order.size(); ++i) {
            auto const& q = query[order[i].second];
            auto const* impact = impacts_[q.term].data();
            auto const* docs = docs_[q.term].data();
            auto const n = docs_[q.term].size();
            for (std::size_t j = 0; j < n; ++j) {
                auto& a = acc[docs[j]];
                if (a != 0.0) {
                    a += q.weight * impact[j];
                }
            }
        }
        if (ranked) {
            theta = std::max(theta, kth_lower_bound());
        }
        for (auto d : touched) {
            if (slack(acc[d]) >= theta) {
                double const s = score(query, d);
                if (s > 0 && (ranked || s >= min_score)) {
                    out.push_back({d, s});
                }
            }
            acc[d] = 0.0;
        }
        if (ranked && out.size() > top_k) {
            std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(top_k), out.end(), better);
            out.resize(top_k);
        } else {
            std::sort(out.begin(), out.end(), better);
        }
        return out;
    }

    static std::vector<double>& scratch_acc() {
        thread_local std::vector<double> acc;
        return acc;
    }

    static std::vector<std::uint32_t>& scratch_touched() {
        thread_local std::vector<std::uint32_t> touched;
        return touched;
    }

    template <typename T>
    static void put(std::ostream& out, T v) {
        out.write(reinterpret_cast<char const*>(&v), sizeof(T));
    }
    static void put_str(std::ostream& out, std::string const& s) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    template <typename T>
    static T get(std::istream& in) {
        T v{};
        in.read(reinterpret_cast<char*>(&v), sizeof(T));
        return v;
    }
    static std::string get_str(std::istream& in) {
        std::string s(get<std::uint32_t>(in), '\0');
        in.read(s.data(), static_cast<std::streamsize>(s.size()));
        return s;
    }

    Granularity granularity_;
    double k1_;
    double b_;
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> lengths_;
    std::vector<SentenceRef> sentences_;
    std::unordered_map<std::string, std::uint32_t> dictionary_;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<double> norm_;
    std::vector<double> max_tf_part_;
    std::vector<std::vector<std::uint32_t>> docs_;  // postings_ split for the scoring loops
    std::vector<std::vector<float>> impacts_;       // tf_part per posting, for bounds only
    double avgdl_ = 0;
};

/// One document per comment, keyed by comment_id, over the normalized text.
inline InvertedIndex build_comment_index(Corpus const& corpus) {
    std::vector<IndexDocument> docs;
    docs.reserve(corpus.size());
    for (auto const& c : corpus.comments()) {
        docs.push_back({c.comment_id, c.norm_text, std::nullopt});
    }
    return InvertedIndex::build(docs, Granularity::comment);
}

/// One document per sentence, keyed by "comment_id#ordinal".
inline InvertedIndex build_sentence_index(Corpus const& corpus) {
    std::vector<IndexDocument> docs;
    docs.reserve(corpus.stats().sentences);
    for (auto const& c : corpus.comments()) {
        for (std::size_t i = 0; i < c.sentences.size(); ++i) {
            docs.push_back({c.comment_id + "#" + std::to_string(i), c.sentences[i],
                            SentenceRef{c.comment_id, c.referee_uid, static_cast<std::uint32_t>(i)}});
        }
    }
    return InvertedIndex::build(docs, Granularity::sentence);
}

}  // namespace dupforge
