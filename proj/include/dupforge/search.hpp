#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/corpus.hpp"
#include "dupforge/evidence.hpp"
#include "dupforge/exclusion.hpp"
#include "dupforge/lsh.hpp"
#include "dupforge/minhash.hpp"
#include "dupforge/similarity.hpp"
#include "dupforge/suppression.hpp"
#include "dupforge/text_index.hpp"

namespace dupforge {

struct SearchConfig {
    std::size_t exact_min_words = 20;
    double search2_threshold = 0.5;
    std::size_t shingle_k = 5;
    std::size_t num_perm = 128;
    double lsh_threshold = 0.5;
    std::size_t top_k = 20;
    double keep_fraction = 0.001;
    double min_bm25_norm = 0.8;
    std::size_t search6_min_terms = 4;
    std::uint64_t seed = 1;
    std::set<Method> searches{all_methods.begin(), all_methods.end()};
    std::vector<std::string> curated_sentences;
};

inline nlohmann::json to_json(SearchConfig const& c) {
    auto searches = nlohmann::json::array();
    for (auto m : c.searches) {
        searches.push_back(to_string(m));
    }
    return {{"exact_min_words", c.exact_min_words},
            {"search2_threshold", c.search2_threshold},
            {"shingle_k", c.shingle_k},
            {"num_perm", c.num_perm},
            {"lsh_threshold", c.lsh_threshold},
            {"top_k", c.top_k},
            {"keep_fraction", c.keep_fraction},
            {"min_bm25_norm", c.min_bm25_norm},
            {"search6_min_terms", c.search6_min_terms},
            {"seed", c.seed},
            {"searches", searches},
            {"curated_sentences", c.curated_sentences}};
}

/// Counts over [edges[i], edges[i + 1]); the last bin is closed.
struct Histogram {
    std::string name;
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;

    static Histogram uniform(std::string name, double lo, double hi, std::size_t bins) {
        Histogram h{std::move(name), {}, std::vector<std::uint64_t>(bins, 0)};
        for (std::size_t i = 0; i <= bins; ++i) {
            h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
        }
        return h;
    }

    void add(double x, std::uint64_t n = 1) {
        if (counts.empty() || x < edges.front() || x > edges.back()) {
            return;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        auto bin = static_cast<std::size_t>(it - edges.begin());
        bin = bin == 0 ? 0 : std::min(bin - 1, counts.size() - 1);
        counts[bin] += n;
    }

    [[nodiscard]] std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) {
            t += c;
        }
        return t;
    }

    bool operator==(Histogram const&) const = default;
};

inline nlohmann::json to_json(Histogram const& h) {
    return {{"name", h.name}, {"edges", h.edges}, {"counts", h.counts}};
}

inline Histogram histogram_from_json(nlohmann::json const& j) {
    return {j.at("name").get<std::string>(), j.at("edges").get<std::vector<double>>(),
            j.at("counts").get<std::vector<std::uint64_t>>()};
}

struct SearchOutput {
    std::vector<PairEvidence> evidence;
    std::vector<Histogram> histograms;
    std::vector<std::string> warnings;
    double index_seconds = 0;
    double search_seconds = 0;
};

namespace detail {

struct PackedShingleHash {
    std::size_t operator()(PackedShingle x) const noexcept {
        auto const lo = static_cast<std::uint64_t>(x);
        auto const hi = static_cast<std::uint64_t>(x >> 64);
        return std::hash<std::uint64_t>{}(lo * 0x9E3779B97F4A7C15ULL ^ hi);
    }
};

class Stopwatch {
public:
    double lap() {
        auto const now = std::chrono::steady_clock::now();
        double const s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Comment sentences as sorted unique ids into a shared table.
struct SentenceTable {
    std::vector<std::string> text;
    std::vector<std::uint32_t> flat;
    std::vector<std::size_t> offset;  // comment i owns flat[offset[i], offset[i + 1])

    explicit SentenceTable(Corpus const& corpus) {
        std::unordered_map<std::string_view, std::uint32_t> ids;
        offset.reserve(corpus.size() + 1);
        offset.push_back(0);
        std::vector<std::uint32_t> own;
        for (auto const& c : corpus.comments()) {
            own.clear();
            for (auto const& s : c.sentences) {
                auto [it, inserted] = ids.emplace(s, static_cast<std::uint32_t>(text.size()));
                if (inserted) {
                    text.push_back(s);
                }
                own.push_back(it->second);
            }
            std::sort(own.begin(), own.end());
            own.erase(std::unique(own.begin(), own.end()), own.end());
            flat.insert(flat.end(), own.begin(), own.end());
            offset.push_back(flat.size());
        }
    }

    [[nodiscard]] std::size_t size(std::size_t i) const { return offset[i + 1] - offset[i]; }

    [[nodiscard]] std::size_t intersection(std::size_t i, std::size_t j) const {
        auto a = flat.begin() + static_cast<std::ptrdiff_t>(offset[i]);
        auto const ae = flat.begin() + static_cast<std::ptrdiff_t>(offset[i + 1]);
        auto b = flat.begin() + static_cast<std::ptrdiff_t>(offset[j]);
        auto const be = flat.begin() + static_cast<std::ptrdiff_t>(offset[j + 1]);
        std::size_t n = 0;
        while (a != ae && b != be) {
            if (*a < *b) {
                ++a;
            } else if (*b < *a) {
                ++b;
            } else {
                ++n;
                ++a;
                ++b;
            }
        }
        return n;
    }

    [[nodiscard]] double jaccard(std::size_t i, std::size_t j) const {
        std::size_t const inter = intersection(i, j);
        std::size_t const uni = size(i) + size(j) - inter;
        return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }

    [[nodiscard]] std::vector<std::string> shared(std::size_t i, std::size_t j) const {
        std::vector<std::string> out;
        for (std::size_t x = offset[i]; x < offset[i + 1]; ++x) {
            if (std::binary_search(flat.begin() + static_cast<std::ptrdiff_t>(offset[j]),
                                   flat.begin() + static_cast<std::ptrdiff_t>(offset[j + 1]), flat[x])) {
                out.push_back(text[flat[x]]);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

/// Exact shingle set of a comment, packed when k allows it.
class ShingleCache {
public:
    ShingleCache(Corpus const& corpus, std::size_t k) : corpus_(corpus), k_(k) {}

    double jaccard(std::size_t i, std::size_t j) {
        if (k_ <= max_packed_shingle) {
            return packed_shingle_jaccard(packed(i), packed(j)).value;
        }
        return shingle_jaccard(shingles(corpus_[i].norm_text, k_), shingles(corpus_[j].norm_text, k_)).value;
    }

    void clear() { packed_.clear(); }

private:
    std::vector<PackedShingle> const& packed(std::size_t i) {
        auto it = packed_.find(i);
        if (it == packed_.end()) {
            it = packed_.emplace(i, packed_shingles(unicode::to_u32(corpus_[i].norm_text), k_)).first;
        }
        return it->second;
    }

    Corpus const& corpus_;
    std::size_t k_;
    std::unordered_map<std::size_t, std::vector<PackedShingle>> packed_;
};

inline std::vector<std::uint32_t> referee_ids(Corpus const& corpus) {
    std::map<std::string, std::uint32_t> ids;
    for (auto const& c : corpus.comments()) {
        ids.emplace(c.referee_uid, 0);
    }
    std::uint32_t n = 0;
    for (auto& [uid, id] : ids) {
        id = n++;
    }
    std::vector<std::uint32_t> out;
    out.reserve(corpus.size());
    for (auto const& c : corpus.comments()) {
        out.push_back(ids[c.referee_uid]);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Search 1: exact duplicates under the canonical form.

inline SearchOutput search1_exact(Corpus const& corpus, std::size_t min_words = 20) {
    SearchOutput out;
    detail::Stopwatch clock;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (auto form = canonical_exact_form(corpus[i].norm_text, min_words)) {
            groups[std::move(*form)].push_back(i);
        }
    }
    out.index_seconds = clock.lap();

    std::map<std::uint64_t, std::uint64_t> sizes;
    for (auto const& [form, members] : groups) {
        if (members.size() < 2) {
            continue;
        }
        ++sizes[members.size()];
        std::map<std::string, std::vector<std::string>> by_referee;
        for (auto i : members) {
            by_referee[corpus[i].referee_uid].push_back(corpus[i].comment_id);
        }
        if (by_referee.size() < 2) {
            continue;
        }
        std::string const& span = corpus[members.front()].norm_text;
        for (auto a = by_referee.begin(); a != by_referee.end(); ++a) {
            for (auto b = std::next(a); b != by_referee.end(); ++b) {
                auto ids = a->second;
                ids.insert(ids.end(), b->second.begin(), b->second.end());
                out.evidence.push_back(
                    make_evidence(a->first, b->first, Method::search1, {Metric::exact, 1.0}, std::move(ids), {span}));
            }
        }
    }
    std::uint64_t const largest = sizes.empty() ? 2 : sizes.rbegin()->first;
    Histogram h{"fig1_duplicate_counts", {}, {}};
    for (std::uint64_t k = 2; k <= largest; ++k) {
        h.edges.push_back(static_cast<double>(k));
        h.counts.push_back(sizes.contains(k) ? sizes[k] : 0);
    }
    h.edges.push_back(static_cast<double>(largest + 1));
    out.histograms.push_back(std::move(h));
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

// ---------------------------------------------------------------------------
// Search 2: sentence-set Jaccard over every cross-referee comment pair.

inline SearchOutput search2_sentence_overlap(Corpus const& corpus, double threshold = 0.5) {
    SearchOutput out;
    detail::Stopwatch clock;
    detail::SentenceTable const table(corpus);
    auto const referee = detail::referee_ids(corpus);
    out.index_seconds = clock.lap();

    auto hist = Histogram::uniform("fig3_sentence_jaccard", 0.0, 1.0, 20);
    std::vector<std::uint64_t> bins(20, 0);
    std::size_t const n = corpus.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t const ni = table.size(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (referee[i] == referee[j]) {
                continue;
            }
            std::size_t const inter = table.intersection(i, j);
            if (inter == 0) {
                ++bins[0];
                continue;
            }
            double const jac = static_cast<double>(inter) / static_cast<double>(ni + table.size(j) - inter);
            ++bins[std::min<std::size_t>(static_cast<std::size_t>(jac * 20.0), 19)];
            if (jac > threshold) {
                out.evidence.push_back(make_evidence(corpus[i].referee_uid, corpus[j].referee_uid, Method::search2,
                                                     {Metric::sentence_jaccard, jac},
                                                     {corpus[i].comment_id, corpus[j].comment_id},
                                                     table.shared(i, j)));
            }
        }
    }
    hist.counts = bins;
    out.histograms.push_back(std::move(hist));
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

// ---------------------------------------------------------------------------
// Search 3: MinHash LSH candidates, verified by exact shingle Jaccard.

inline SearchOutput search3_lsh(Corpus const& corpus, std::size_t k = 5, std::size_t num_perm = 128,
                                double threshold = 0.5, std::uint64_t seed = 1) {
    SearchOutput out;
    detail::Stopwatch clock;
    MinHasher const hasher(num_perm, seed);
    LshIndex index(num_perm, seed, threshold);
    std::vector<MinHashSignature> sigs;
    sigs.reserve(corpus.size());
    std::size_t skipped = 0;
    for (auto const& c : corpus.comments()) {
        auto sig = hasher.signature(shingle_hashes(unicode::to_u32(c.norm_text), k), c.comment_id);
        skipped += sig.is_empty_set() ? 1 : 0;
        index.insert(sig);
        sigs.push_back(std::move(sig));
    }
    if (skipped > 0) {
        out.warnings.push_back(std::to_string(skipped) + " comments shorter than the shingle length were skipped");
    }
    out.index_seconds = clock.lap();

    detail::ShingleCache cache(corpus, k);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (auto j : index.query_docs(sigs[i], i)) {
            if (j <= i || corpus[i].referee_uid == corpus[j].referee_uid) {
                continue;
            }
            double const jac = cache.jaccard(i, j);
            if (jac >= threshold) {
                out.evidence.push_back(make_evidence(corpus[i].referee_uid, corpus[j].referee_uid, Method::search3,
                                                     {Metric::shingle_jaccard, jac},
                                                     {corpus[i].comment_id, corpus[j].comment_id}));
            }
        }
    }
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

// ---------------------------------------------------------------------------
// Search 4: BM25 retrieval, five similarity metrics, top fraction per metric.

inline constexpr std::array<Metric, 5> search4_metrics{Metric::indel_ratio, Metric::partial_ratio,
                                                       Metric::token_sort_ratio, Metric::sentence_jaccard,
                                                       Metric::shingle_jaccard};

/// Indices of `values` in the top `fraction` by rank, ties at the cutoff
/// included and zero scores never kept.
inline std::vector<std::size_t> keep_top_fraction(std::vector<double> const& values, double fraction) {
    std::vector<std::size_t> out;
    if (values.empty() || fraction <= 0) {
        return out;
    }
    auto const keep = static_cast<std::size_t>(std::ceil(static_cast<double>(values.size()) * fraction - 1e-9));
    if (keep == 0) {
        return out;
    }
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double const cutoff = sorted[std::min(keep, sorted.size()) - 1];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= cutoff && values[i] > 0) {
            out.push_back(i);
        }
    }
    return out;
}

inline SearchOutput search4_index_fuzzy(Corpus const& corpus, std::size_t top_k = 20, double keep_fraction = 0.001,
                                        std::size_t k = 5) {
    SearchOutput out;
    detail::Stopwatch clock;
    if (corpus.empty()) {
        throw std::invalid_argument("search 4 needs a non-empty index");
    }
    auto const index = build_comment_index(corpus);
    out.index_seconds = clock.lap();

    std::set<std::pair<std::uint32_t, std::uint32_t>> pair_set;
    for (std::uint32_t i = 0; i < corpus.size(); ++i) {
        for (auto const& hit : index.query(corpus[i].norm_text, top_k)) {
            if (hit.doc == i || corpus[hit.doc].referee_uid == corpus[i].referee_uid) {
                continue;
            }
            pair_set.emplace(std::min(i, hit.doc), std::max(i, hit.doc));
        }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> const pairs(pair_set.begin(), pair_set.end());

    std::vector<std::u32string> texts;
    std::vector<std::u32string> sorted;
    texts.reserve(corpus.size());
    sorted.reserve(corpus.size());
    for (auto const& c : corpus.comments()) {
        texts.push_back(unicode::to_u32(c.norm_text));
        sorted.push_back(fuzzy::sorted_tokens(texts.back()));
    }
    detail::SentenceTable const table(corpus);
    std::array<std::vector<double>, 5> values;
    for (auto& v : values) {
        v.reserve(pairs.size());
    }
    // Shingles interned to dense ids once per comment; each pair is then a merge.
    std::vector<std::vector<std::uint32_t>> shingle_ids(corpus.size());
    if (k <= max_packed_shingle) {
        std::unordered_map<PackedShingle, std::uint32_t, detail::PackedShingleHash> ids;
        for (std::uint32_t c = 0; c < corpus.size(); ++c) {
            auto& out_ids = shingle_ids[c];
            for (auto const& sh : packed_shingles(texts[c], k)) {
                out_ids.push_back(ids.try_emplace(sh, static_cast<std::uint32_t>(ids.size())).first->second);
            }
            std::sort(out_ids.begin(), out_ids.end());
        }
    }
    for (auto const& [i, j] : pairs) {
        values[0].push_back(fuzzy::indel_ratio(texts[i], texts[j]));
        values[1].push_back(fuzzy::partial_ratio(texts[i], texts[j]));
        values[2].push_back(fuzzy::indel_ratio(sorted[i], sorted[j]));
        values[3].push_back(table.jaccard(i, j));
        values[4].push_back(k <= max_packed_shingle
                                ? detail::sorted_jaccard(shingle_ids[i], shingle_ids[j])
                                : shingle_jaccard(shingles(texts[i], k), shingles(texts[j], k)).value);
    }

    std::map<std::size_t, std::vector<Metric>> kept;
    for (std::size_t m = 0; m < search4_metrics.size(); ++m) {
        double const hi = scale_max(search4_metrics[m]);
        auto h = Histogram::uniform("search4_" + std::string(to_string(search4_metrics[m])), 0.0, hi, 20);
        for (double v : values[m]) {
            h.add(v);
        }
        out.histograms.push_back(std::move(h));
        for (auto p : keep_top_fraction(values[m], keep_fraction)) {
            kept[p].push_back(search4_metrics[m]);
        }
    }
    for (auto const& [p, metrics] : kept) {
        auto const [i, j] = pairs[p];
        std::size_t const first = static_cast<std::size_t>(
            std::find(search4_metrics.begin(), search4_metrics.end(), metrics.front()) - search4_metrics.begin());
        auto e = make_evidence(corpus[i].referee_uid, corpus[j].referee_uid, Method::search4,
                               {metrics.front(), values[first][p]}, {corpus[i].comment_id, corpus[j].comment_id},
                               table.shared(i, j));
        for (std::size_t m = 0; m < search4_metrics.size(); ++m) {
            e.metrics[search4_metrics[m]] = values[m][p];
        }
        e.kept_by = metrics;
        out.evidence.push_back(std::move(e));
    }
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

// ---------------------------------------------------------------------------
// Search 5: sentence frequency table and curated sentences.

struct SentenceFrequencyRow {
    std::string sentence;
    std::size_t occurrences = 0;
    std::size_t referees = 0;
    std::size_t journals = 0;
    std::optional<RuleCategory> excluded_by;

    bool operator==(SentenceFrequencyRow const&) const = default;
};

inline std::optional<RuleCategory> rule_for(ExclusionRules const& rules, std::string const& sentence,
                                            std::set<std::string> const& journals) {
    if (auto c = rules.category(sentence)) {
        return c;
    }
    for (auto const& j : journals) {
        if (auto c = rules.category(sentence, j)) {
            return c;
        }
    }
    return std::nullopt;
}

/// Rows ordered by distinct referees, then occurrences (both descending),
/// then text.
inline std::vector<SentenceFrequencyRow> sentence_frequency_table(Corpus const& corpus, ExclusionRules const& rules) {
    struct Acc {
        std::size_t occurrences = 0;
        std::set<std::string> referees;
        std::set<std::string> journals;
    };
    std::unordered_map<std::string, Acc> acc;
    for (auto const& c : corpus.comments()) {
        for (auto const& s : c.sentences) {
            auto& a = acc[s];
            ++a.occurrences;
            a.referees.insert(c.referee_uid);
            a.journals.insert(c.journal_id);
        }
    }
    std::vector<SentenceFrequencyRow> rows;
    rows.reserve(acc.size());
    for (auto const& [s, a] : acc) {
        rows.push_back({s, a.occurrences, a.referees.size(), a.journals.size(), std::nullopt});
    }
    std::sort(rows.begin(), rows.end(), [](auto const& x, auto const& y) {
        return std::tie(y.referees, y.occurrences, x.sentence) < std::tie(x.referees, x.occurrences, y.sentence);
    });
    for (auto& r : rows) {
        r.excluded_by = rule_for(rules, r.sentence, acc[r.sentence].journals);
    }
    return rows;
}

/// Sentences of `rows` shared by at least `min_referees` accounts and not
/// excluded; the shortlist an investigator curates from.
inline std::vector<std::string> curation_candidates(std::vector<SentenceFrequencyRow> const& rows,
                                                    std::size_t min_referees = 3) {
    std::vector<std::string> out;
    for (auto const& r : rows) {
        if (r.referees >= min_referees && !r.excluded_by) {
            out.push_back(r.sentence);
        }
    }
    return out;
}

inline SearchOutput search5_curated(Corpus const& corpus, std::vector<std::string> const& curated,
                                    ExclusionRules const& rules, bool allow_excluded = false) {
    SearchOutput out;
    detail::Stopwatch clock;
    std::map<std::string, std::map<std::string, std::vector<std::string>>> wanted;  // sentence -> uid -> comments
    for (auto const& raw : curated) {
        wanted.emplace(normalize_text(raw), std::map<std::string, std::vector<std::string>>{});
    }
    std::map<std::string, std::set<std::string>> journals;
    for (auto const& c : corpus.comments()) {
        for (auto const& s : c.sentences) {
            auto it = wanted.find(s);
            if (it != wanted.end()) {
                auto& ids = it->second[c.referee_uid];
                if (ids.empty() || ids.back() != c.comment_id) {
                    ids.push_back(c.comment_id);
                }
                journals[s].insert(c.journal_id);
            }
        }
    }
    out.index_seconds = clock.lap();
    for (auto const& [sentence, by_referee] : wanted) {
        if (by_referee.empty()) {
            out.warnings.push_back("curated sentence not found in corpus: " + sentence);
            continue;
        }
        if (!allow_excluded) {
            if (auto rule = rule_for(rules, sentence, journals[sentence])) {
                out.warnings.push_back("curated sentence matches exclusion rule " + std::string(to_string(*rule)) +
                                       ": " + sentence);
                continue;
            }
        }
        for (auto a = by_referee.begin(); a != by_referee.end(); ++a) {
            for (auto b = std::next(a); b != by_referee.end(); ++b) {
                auto ids = a->second;
                ids.insert(ids.end(), b->second.begin(), b->second.end());
                out.evidence.push_back(make_evidence(a->first, b->first, Method::search5, {Metric::exact, 1.0},
                                                     std::move(ids), {sentence}));
            }
        }
    }
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

// ---------------------------------------------------------------------------
// Search 6: expand from seed accounts through the sentence index.

inline SearchOutput search6_sentence_expand(Corpus const& corpus, InvertedIndex const& index,
                                            std::set<std::string> const& seeds, double min_bm25_norm,
                                            ExclusionRules const& rules, std::size_t min_terms = 4) {
    SearchOutput out;
    detail::Stopwatch clock;
    std::vector<std::size_t> first_doc;
    first_doc.reserve(corpus.size());
    std::size_t docs = 0;
    for (auto const& c : corpus.comments()) {
        first_doc.push_back(docs);
        docs += c.sentences.size();
    }
    if (docs != index.doc_count()) {
        throw std::invalid_argument("sentence index does not match corpus");
    }
    std::set<std::string> present;
    for (auto const& c : corpus.comments()) {
        if (seeds.contains(c.referee_uid)) {
            present.insert(c.referee_uid);
        }
    }
    for (auto const& s : seeds) {
        if (!present.contains(s)) {
            out.warnings.push_back("seed account not in corpus: " + s);
        }
    }

    struct Link {
        double score = 0;
        std::set<std::string> spans;
    };
    std::map<std::pair<std::size_t, std::size_t>, Link> links;  // (comment, comment) in corpus order
    std::unordered_map<std::size_t, bool> hit_excluded;
    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        auto const& c = corpus[ci];
        if (!seeds.contains(c.referee_uid)) {
            continue;
        }
        for (std::size_t si = 0; si < c.sentences.size(); ++si) {
            auto const& sentence = c.sentences[si];
            if (rules.match(sentence, c.journal_id)) {
                continue;
            }
            auto const query = index.prepare(sentence);
            std::size_t terms = 0;
            for (auto const& q : query) {
                terms += q.qtf;
            }
            if (terms < min_terms) {
                continue;
            }
            auto const self = static_cast<std::uint32_t>(first_doc[ci] + si);
            double const self_score = index.score(query, self);
            if (self_score <= 0) {
                continue;
            }
            for (auto const& hit : index.query_min_score(query, min_bm25_norm * self_score)) {
                auto const& ref = index.sentence(hit.doc);
                if (ref.referee_uid == c.referee_uid) {
                    continue;
                }
                auto const cj = *corpus.find(ref.comment_id);
                auto [it, fresh] = hit_excluded.try_emplace(hit.doc, false);
                if (fresh) {
                    it->second = rules.match(corpus[cj].sentences[ref.ordinal], corpus[cj].journal_id).has_value();
                }
                if (it->second) {
                    continue;
                }
                auto& link = links[{std::min(ci, cj), std::max(ci, cj)}];
                link.score = std::max(link.score, std::min(1.0, hit.score / self_score));
                link.spans.insert(sentence);
            }
        }
    }
    for (auto const& [key, link] : links) {
        auto const& a = corpus[key.first];
        auto const& b = corpus[key.second];
        out.evidence.push_back(make_evidence(a.referee_uid, b.referee_uid, Method::search6, {Metric::bm25, link.score},
                                             {a.comment_id, b.comment_id},
                                             std::vector<std::string>(link.spans.begin(), link.spans.end())));
    }
    canonicalize(out.evidence);
    out.search_seconds = clock.lap();
    return out;
}

inline SearchOutput search6_sentence_expand(Corpus const& corpus, std::set<std::string> const& seeds,
                                            double min_bm25_norm, ExclusionRules const& rules,
                                            std::size_t min_terms = 4) {
    detail::Stopwatch clock;
    auto const index = build_sentence_index(corpus);
    double const build = clock.lap();
    auto out = search6_sentence_expand(corpus, index, seeds, min_bm25_norm, rules, min_terms);
    out.index_seconds += build;
    return out;
}

// ---------------------------------------------------------------------------
// Orchestration.

enum class RunStatus { running, complete, failed };

inline std::string_view to_string(RunStatus s) {
    switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::complete: return "complete";
    case RunStatus::failed: return "failed";
    }
    return "failed";
}

inline std::optional<RunStatus> parse_run_status(std::string_view s) {
    for (auto r : {RunStatus::running, RunStatus::complete, RunStatus::failed}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    return std::nullopt;
}

struct SearchTiming {
    Method method = Method::search1;
    double index_seconds = 0;
    double search_seconds = 0;
    std::size_t accounts_found = 0;
    std::size_t evidence_count = 0;
};

struct RunRecord {
    std::string run_id;
    nlohmann::json config;
    std::string corpus_version;
    std::uint64_t suppression_version = 0;
    RunStatus status = RunStatus::running;
    std::string error;
    std::string created_at;
    std::vector<SearchTiming> timings;
    std::vector<PairEvidence> evidence;    // unsuppressed
    std::vector<PairEvidence> suppressed;  // touched a suppressed entity
    std::vector<Histogram> histograms;
    std::vector<SentenceFrequencyRow> sentence_table;  // leading rows only
    std::vector<std::string> warnings;

    [[nodiscard]] std::set<std::string> accounts(Method m) const { return accounts_of(evidence, m); }
    [[nodiscard]] std::set<Method> methods_run() const {
        std::set<Method> out;
        for (auto const& t : timings) {
            out.insert(t.method);
        }
        return out;
    }
    [[nodiscard]] Histogram const* histogram(std::string const& name) const {
        for (auto const& h : histograms) {
            if (h.name == name) {
                return &h;
            }
        }
        return nullptr;
    }
};

/// Content fingerprint of a corpus: FNV-1a over ids, referees and text.
inline std::string corpus_version(Corpus const& corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    };
    for (auto const& c : corpus.comments()) {
        mix(c.comment_id);
        mix(c.referee_uid);
        mix(c.norm_text);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fmix64(h)));
    return buf;
}

inline constexpr std::size_t sentence_table_rows_kept = 1000;

/// Runs the configured searches in order, Search 6 seeded with every
/// account found by Searches 1 to 5. Suppression filters the output only,
/// so the searches themselves always see the full corpus.
inline RunRecord run_all(Corpus const& corpus, SearchConfig const& config, SuppressionList const& suppression,
                         ExclusionRules const& rules, std::string run_id = "run") {
    RunRecord run;
    run.run_id = std::move(run_id);
    run.config = to_json(config);
    run.corpus_version = corpus_version(corpus);
    run.suppression_version = suppression.version();
    run.created_at = utc_now_iso();

    std::vector<PairEvidence> raw;
    auto record = [&](Method m, SearchOutput&& o) {
        run.timings.push_back({m, o.index_seconds, o.search_seconds, 0, 0});
        for (auto& w : o.warnings) {
            run.warnings.push_back(to_string(m) + ": " + w);
        }
        for (auto& h : o.histograms) {
            run.histograms.push_back(std::move(h));
        }
        raw.insert(raw.end(), std::make_move_iterator(o.evidence.begin()), std::make_move_iterator(o.evidence.end()));
    };
    auto const enabled = [&](Method m) { return config.searches.contains(m); };

    try {
        if (enabled(Method::search1)) {
            record(Method::search1, search1_exact(corpus, config.exact_min_words));
        }
        if (enabled(Method::search2)) {
            record(Method::search2, search2_sentence_overlap(corpus, config.search2_threshold));
        }
        if (enabled(Method::search3)) {
            record(Method::search3,
                   search3_lsh(corpus, config.shingle_k, config.num_perm, config.lsh_threshold, config.seed));
        }
        if (enabled(Method::search4) && !corpus.empty()) {
            record(Method::search4, search4_index_fuzzy(corpus, config.top_k, config.keep_fraction, config.shingle_k));
        }
        if (enabled(Method::search5)) {
            detail::Stopwatch clock;
            auto table = sentence_frequency_table(corpus, rules);
            double const table_seconds = clock.lap();
            Histogram h{"table2_sentence_frequency", {}, {}};
            std::map<std::size_t, std::uint64_t> by_count;
            for (auto const& r : table) {
                ++by_count[r.referees];
            }
            for (auto const& [count, n] : by_count) {
                h.edges.push_back(static_cast<double>(count));
                h.counts.push_back(n);
            }
            h.edges.push_back(by_count.empty() ? 1.0 : static_cast<double>(by_count.rbegin()->first + 1));
            if (table.size() > sentence_table_rows_kept) {
                table.resize(sentence_table_rows_kept);
            }
            run.sentence_table = std::move(table);
            auto out = search5_curated(corpus, config.curated_sentences, rules);
            out.index_seconds += table_seconds;
            out.histograms.push_back(std::move(h));
            record(Method::search5, std::move(out));
        }
        if (enabled(Method::search6)) {
            auto const seeds = accounts_of(raw);
            if (seeds.empty()) {
                run.timings.push_back({Method::search6, 0, 0, 0, 0});
                run.warnings.push_back("search6: no seed accounts from earlier searches");
            } else {
                record(Method::search6, search6_sentence_expand(corpus, seeds, config.min_bm25_norm, rules,
                                                                config.search6_min_terms));
            }
        }
        run.status = RunStatus::complete;
    } catch (std::exception const& e) {
        run.status = RunStatus::failed;
        run.error = e.what();
    }

    for (auto& e : raw) {
        e.run_id = run.run_id;
    }
    canonicalize(raw);
    auto [kept, dropped] = apply_suppression(std::move(raw), suppression);
    run.evidence = std::move(kept);
    run.suppressed = std::move(dropped);
    for (auto& t : run.timings) {
        auto const accounts = accounts_of(run.evidence, t.method);
        t.accounts_found = accounts.size();
        t.evidence_count = static_cast<std::size_t>(std::count_if(
            run.evidence.begin(), run.evidence.end(), [&](PairEvidence const& e) { return e.method == t.method; }));
    }
    return run;
}

}  // namespace dupforge
