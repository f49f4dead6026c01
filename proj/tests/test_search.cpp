#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dupforge/search.hpp"

using namespace dupforge;
using Catch::Matchers::WithinAbs;

namespace {

using AccountPair = std::pair<std::string, std::string>;
using CommentPair = std::pair<std::string, std::string>;

AccountPair ordered(std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    return {a, b};
}

std::set<AccountPair> account_pairs(std::vector<PairEvidence> const& ev) {
    std::set<AccountPair> out;
    for (auto const& e : ev) out.emplace(e.account_a, e.account_b);
    return out;
}

std::map<CommentPair, double> comment_pairs(std::vector<PairEvidence> const& ev) {
    std::map<CommentPair, double> out;
    for (auto const& e : ev) {
        REQUIRE(e.comment_ids.size() == 2);
        out[{e.comment_ids[0], e.comment_ids[1]}] = e.score.value;
    }
    return out;
}

std::string word(std::mt19937_64& rng, std::size_t vocab) {
    static char const* const syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "zi", "pa"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    std::size_t w = pick(rng);
    std::string out;
    do {
        out += syllables[w % 10];
        w /= 10;
    } while (w > 0);
    return out + "x";
}

std::string sentence(std::mt19937_64& rng, std::size_t vocab) {
    std::uniform_int_distribution<int> len(6, 14);
    std::string s = "The";
    for (int i = 0, n = len(rng); i < n; ++i) s += " " + word(rng, vocab);
    return s + ".";
}

/// Comments drawn from a shared sentence pool so that overlap is common,
/// with a few verbatim copies across referees.
Corpus random_corpus(std::uint64_t seed, std::size_t n, std::size_t referees, std::size_t pool_size = 120) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(sentence(rng, 400));
    std::uniform_int_distribution<std::size_t> pick_pool(0, pool.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_ref(0, referees - 1);
    std::uniform_int_distribution<int> len(2, 6);
    std::bernoulli_distribution fresh(0.5);
    std::bernoulli_distribution copy(0.05);
    std::vector<Comment> comments;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        if (copy(rng) && !comments.empty()) {
            std::uniform_int_distribution<std::size_t> prev(0, comments.size() - 1);
            text = comments[prev(rng)].raw_text;
        } else {
            for (int s = 0, m = len(rng); s < m; ++s) {
                text += (fresh(rng) ? sentence(rng, 400) : pool[pick_pool(rng)]) + " ";
            }
        }
        comments.push_back(make_comment("c" + std::to_string(1000 + i), "a" + std::to_string(i), "uid" +
                                        std::to_string(100 + pick_ref(rng)), "j" + std::to_string(i % 3), text));
    }
    return Corpus(std::move(comments), {}, {}, {});
}

Corpus tiny(std::vector<std::pair<std::string, std::string>> const& rows) {
    std::vector<Comment> comments;
    int i = 0;
    for (auto const& [uid, text] : rows) {
        comments.push_back(make_comment("c" + std::to_string(++i), "a" + std::to_string(i), uid, "j1", text));
    }
    return Corpus(std::move(comments), {}, {}, {});
}

std::string words(int n, std::string const& stem = "word") {
    std::string s;
    for (int i = 0; i < n; ++i) s += stem + std::to_string(i) + " ";
    return s;
}

}  // namespace

TEST_CASE("search 1 links every pair of accounts sharing a canonical form") {
    auto const corpus = random_corpus(4, 400, 40);
    auto const out = search1_exact(corpus, 20);
    std::set<AccountPair> oracle;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto const fi = canonical_exact_form(corpus[i].norm_text, 20);
        if (!fi) continue;
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            if (corpus[i].referee_uid != corpus[j].referee_uid && fi == canonical_exact_form(corpus[j].norm_text, 20)) {
                oracle.insert(ordered(corpus[i].referee_uid, corpus[j].referee_uid));
            }
        }
    }
    REQUIRE_FALSE(oracle.empty());
    CHECK(account_pairs(out.evidence) == oracle);
    for (auto const& e : out.evidence) {
        CHECK(e.method == Method::search1);
        CHECK(e.score.value == 1.0);
        CHECK(e.comment_ids.size() >= 2);
    }
}

TEST_CASE("search 1 respects the word floor and ignores same-referee copies") {
    auto const text19 = words(19);
    auto const text20 = words(20);
    auto const corpus = tiny({{"uid1", text19}, {"uid2", text19}, {"uid3", text20}, {"uid4", text20 + "  "},
                              {"uid5", words(25, "x")}, {"uid5", words(25, "x")}});
    auto const out = search1_exact(corpus, 20);
    CHECK(account_pairs(out.evidence) == std::set<AccountPair>{{"uid3", "uid4"}});
    auto const* h = &out.histograms.front();
    CHECK(h->name == "fig1_duplicate_counts");
    CHECK(h->total() == 2);  // the uid3/uid4 group and the uid5 group
}

TEST_CASE("search 2 agrees with a direct sentence Jaccard oracle") {
    auto const corpus = random_corpus(9, 250, 30);
    for (double threshold : {0.0, 0.3, 0.5}) {
        auto const out = search2_sentence_overlap(corpus, threshold);
        std::map<CommentPair, double> oracle;
        std::uint64_t pairs = 0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (std::size_t j = i + 1; j < corpus.size(); ++j) {
                if (corpus[i].referee_uid == corpus[j].referee_uid) continue;
                ++pairs;
                double const jac = sentence_jaccard(corpus[i].sentences, corpus[j].sentences).value;
                if (jac > threshold) {
                    auto key = ordered(corpus[i].comment_id, corpus[j].comment_id);
                    oracle[key] = jac;
                }
            }
        }
        auto const got = comment_pairs(out.evidence);
        REQUIRE(got.size() == oracle.size());
        for (auto const& [k, v] : oracle) {
            REQUIRE(got.contains(k));
            REQUIRE_THAT(got.at(k), WithinAbs(v, 1e-12));
        }
        CHECK(out.histograms.front().total() == pairs);
    }
}

TEST_CASE("search 2 reports the shared sentences") {
    auto const corpus = tiny({{"uid1", "Alpha beta gamma. Delta epsilon zeta."},
                              {"uid2", "Alpha beta gamma. Delta epsilon zeta. Eta theta."}});
    auto const out = search2_sentence_overlap(corpus, 0.5);
    REQUIRE(out.evidence.size() == 1);
    CHECK_THAT(out.evidence[0].score.value, WithinAbs(2.0 / 3.0, 1e-12));
    CHECK(out.evidence[0].matched_spans == std::vector<std::string>{"Alpha beta gamma.", "Delta epsilon zeta."});
}

TEST_CASE("search 3 verified pairs are exact and near-duplicates are found") {
    auto const corpus = random_corpus(15, 300, 30, 60);
    auto const out = search3_lsh(corpus, 5, 128, 0.5, 1);
    std::map<CommentPair, double> strong;
    std::map<CommentPair, double> all;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto const si = shingles(corpus[i].norm_text, 5);
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            if (corpus[i].referee_uid == corpus[j].referee_uid) continue;
            double const jac = shingle_jaccard(si, shingles(corpus[j].norm_text, 5)).value;
            auto key = ordered(corpus[i].comment_id, corpus[j].comment_id);
            if (jac >= 0.5) all[key] = jac;
            if (jac >= 0.8) strong[key] = jac;
        }
    }
    auto const got = comment_pairs(out.evidence);
    REQUIRE_FALSE(strong.empty());
    for (auto const& [k, v] : got) {
        REQUIRE(all.contains(k));
        REQUIRE_THAT(v, WithinAbs(all.at(k), 1e-12));
    }
    for (auto const& [k, v] : strong) {
        CHECK(got.contains(k));
    }
}

TEST_CASE("search 3 warns about comments too short to shingle") {
    auto const corpus = tiny({{"uid1", "abc"}, {"uid2", words(30)}, {"uid3", words(30)}});
    auto const out = search3_lsh(corpus, 5, 128, 0.5, 1);
    CHECK(out.warnings.size() == 1);
    CHECK(account_pairs(out.evidence) == std::set<AccountPair>{{"uid2", "uid3"}});
}

TEST_CASE("keep_top_fraction keeps ties and never keeps zeros") {
    CHECK(keep_top_fraction({0, 0, 5, 3, 3, 1}, 0.34) == std::vector<std::size_t>{2, 3, 4});
    CHECK(keep_top_fraction({1, 1, 1, 1}, 0.25) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(keep_top_fraction({0, 0, 0}, 0.5).empty());
    CHECK(keep_top_fraction({0, 2, 0}, 1.0) == std::vector<std::size_t>{1});
    CHECK(keep_top_fraction({}, 0.5).empty());
    CHECK(keep_top_fraction({4, 3}, 0.0).empty());
}

TEST_CASE("search 4 keep-sets match an independent recomputation") {
    auto const corpus = random_corpus(23, 200, 25);
    std::size_t const top_k = 5;
    double const fraction = 0.05;
    auto const out = search4_index_fuzzy(corpus, top_k, fraction, 5);

    auto const idx = build_comment_index(corpus);
    std::set<std::pair<std::size_t, std::size_t>> candidates;
    for (std::uint32_t i = 0; i < corpus.size(); ++i) {
        auto const all = idx.exhaustive(corpus[i].norm_text);
        for (std::size_t r = 0; r < std::min(top_k, all.size()); ++r) {
            auto const j = all[r].doc;
            if (j != i && corpus[i].referee_uid != corpus[j].referee_uid) {
                candidates.emplace(std::min<std::size_t>(i, j), std::max<std::size_t>(i, j));
            }
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> const pairs(candidates.begin(), candidates.end());
    std::array<std::vector<double>, 5> values;
    for (auto const& [i, j] : pairs) {
        auto const& a = corpus[i];
        auto const& b = corpus[j];
        values[0].push_back(fuzzy::indel_ratio(std::string_view(a.norm_text), std::string_view(b.norm_text)));
        values[1].push_back(fuzzy::partial_ratio(std::string_view(a.norm_text), std::string_view(b.norm_text)));
        values[2].push_back(fuzzy::token_sort_ratio(std::string_view(a.norm_text), std::string_view(b.norm_text)));
        values[3].push_back(sentence_jaccard(a.sentences, b.sentences).value);
        values[4].push_back(shingle_jaccard(shingles(a.norm_text, 5), shingles(b.norm_text, 5)).value);
    }
    std::map<CommentPair, std::vector<Metric>> oracle;
    auto const n_keep = static_cast<std::size_t>(std::ceil(static_cast<double>(pairs.size()) * fraction));
    for (std::size_t m = 0; m < 5; ++m) {
        std::vector<double> sorted(values[m]);
        std::sort(sorted.rbegin(), sorted.rend());
        double const cutoff = sorted[n_keep - 1];
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            if (values[m][p] >= cutoff && values[m][p] > 0) {
                oracle[ordered(corpus[pairs[p].first].comment_id, corpus[pairs[p].second].comment_id)].push_back(
                    search4_metrics[m]);
            }
        }
    }
    REQUIRE_FALSE(oracle.empty());
    std::map<CommentPair, std::vector<Metric>> got;
    for (auto const& e : out.evidence) {
        got[{e.comment_ids[0], e.comment_ids[1]}] = e.kept_by;
        CHECK(e.metrics.size() == 5);
        CHECK(e.score.metric == e.kept_by.front());
        CHECK(e.score.value == e.metrics.at(e.kept_by.front()));
    }
    CHECK(got == oracle);
    REQUIRE(out.histograms.size() == 5);
    for (auto const& h : out.histograms) CHECK(h.total() == pairs.size());
}

TEST_CASE("search 4 rejects an empty corpus") {
    CHECK_THROWS_AS(search4_index_fuzzy(Corpus{}, 20, 0.001), std::invalid_argument);
}

TEST_CASE("sentence frequency table orders by referee count") {
    auto const corpus = tiny({{"uid1", "Shared by three accounts here. Thank you for the opportunity to review this paper."},
                              {"uid2", "Shared by three accounts here. Thank you for the opportunity to review this paper."},
                              {"uid3", "Shared by three accounts here. Only mine."},
                              {"uid3", "Only mine. Only mine."}});
    auto const rules = ExclusionRules::defaults();
    auto const rows = sentence_frequency_table(corpus, rules);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].sentence == "Shared by three accounts here.");
    CHECK(rows[0].referees == 3);
    CHECK(rows[1].referees == 2);
    CHECK(rows[1].excluded_by == RuleCategory::convergence);
    CHECK(rows[2].sentence == "Only mine.");
    CHECK(rows[2].occurrences == 3);
    CHECK(rows[2].referees == 1);
    CHECK(curation_candidates(rows, 2) == std::vector<std::string>{"Shared by three accounts here."});
}

TEST_CASE("search 5 links every pair of accounts using a curated sentence") {
    auto const corpus = tiny({{"uid1", "The rare misspeled phrase apears here. Other text."},
                              {"uid2", "Intro. The rare misspeled phrase apears here."},
                              {"uid3", "The  rare misspeled phrase apears here."},
                              {"uid4", "I have no further comments."},
                              {"uid5", "I have no further comments."}});
    auto const rules = ExclusionRules::defaults();
    auto const out = search5_curated(
        corpus, {"The rare misspeled phrase apears here.", "I have no further comments.", "Never used."}, rules);
    CHECK(account_pairs(out.evidence) ==
          std::set<AccountPair>{{"uid1", "uid2"}, {"uid1", "uid3"}, {"uid2", "uid3"}});
    CHECK(out.warnings.size() == 2);
    auto const forced = search5_curated(corpus, {"I have no further comments."}, rules, true);
    CHECK(account_pairs(forced.evidence) == std::set<AccountPair>{{"uid4", "uid5"}});
}

TEST_CASE("search 6 expands from seeds through near-identical sentences") {
    auto const corpus = tiny({
        {"uid1", "The statistical analysis lacks a proper correction for multiple comparisons. Fine."},
        {"uid2", "Overall good. The statistical analysis lacks a proper correction for multiple comparisons!"},
        {"uid3", "The statistical analysis lacks a correction. Something unrelated entirely about cells."},
        {"uid1", "The statistical analysis lacks a proper correction for multiple comparisons."},
        {"uid4", "Thank you for the opportunity to review this paper. Cells were stained blue today."},
        {"uid5", "Thank you for the opportunity to review this paper. Mice were fed in the morning."},
    });
    auto const rules = ExclusionRules::defaults();
    auto const out = search6_sentence_expand(corpus, {"uid1", "uid4"}, 0.8, rules, 4);
    CHECK(account_pairs(out.evidence) == std::set<AccountPair>{{"uid1", "uid2"}});
    for (auto const& e : out.evidence) {
        CHECK(e.score.metric == Metric::bm25);
        CHECK(e.score.value > 0.8);
        CHECK(e.score.value <= 1.0);
        CHECK(e.matched_spans ==
              std::vector<std::string>{"The statistical analysis lacks a proper correction for multiple comparisons."});
    }
    auto const low = search6_sentence_expand(corpus, {"uid1"}, 0.3, rules, 4);
    CHECK(account_pairs(low.evidence).contains({"uid1", "uid3"}));
    auto const missing = search6_sentence_expand(corpus, {"uid999"}, 0.8, rules, 4);
    CHECK(missing.evidence.empty());
    CHECK(missing.warnings.size() == 1);
}

TEST_CASE("search 6 matches a brute-force normalized BM25 oracle") {
    auto const corpus = random_corpus(31, 150, 20, 40);
    auto const rules = ExclusionRules::defaults();
    std::set<std::string> const seeds{"uid100", "uid101", "uid102"};
    auto const idx = build_sentence_index(corpus);
    auto const out = search6_sentence_expand(corpus, idx, seeds, 0.8, rules, 4);

    std::map<CommentPair, double> oracle;
    std::uint32_t doc = 0;
    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        for (auto const& s : corpus[ci].sentences) {
            std::uint32_t const self = doc++;
            if (!seeds.contains(corpus[ci].referee_uid) || analyze(s).size() < 4) continue;
            double const self_score = idx.score(s, self);
            for (std::uint32_t d = 0; d < idx.doc_count(); ++d) {
                auto const& ref = idx.sentence(d);
                if (ref.referee_uid == corpus[ci].referee_uid) continue;
                double const sc = idx.score(s, d);
                if (sc > 0 && sc >= 0.8 * self_score) {
                    auto key = ordered(corpus[ci].comment_id, ref.comment_id);
                    oracle[key] = std::max(oracle[key], std::min(1.0, sc / self_score));
                }
            }
        }
    }
    REQUIRE_FALSE(oracle.empty());
    auto const got = comment_pairs(out.evidence);
    REQUIRE(got.size() == oracle.size());
    for (auto const& [k, v] : oracle) {
        REQUIRE(got.contains(k));
        REQUIRE_THAT(got.at(k), WithinAbs(v, 1e-12));
    }
}

TEST_CASE("run_all seeds search 6, filters suppression and is deterministic") {
    auto const corpus = random_corpus(41, 300, 30);
    auto const rules = ExclusionRules::defaults();
    SearchConfig config;
    config.keep_fraction = 0.01;
    SuppressionList none;
    auto const a = run_all(corpus, config, none, rules, "r1");
    auto const b = run_all(corpus, config, none, rules, "r1");
    REQUIRE(a.status == RunStatus::complete);
    CHECK(a.evidence == b.evidence);
    CHECK(a.timings.size() == 6);
    CHECK(a.suppressed.empty());
    for (auto const& e : a.evidence) CHECK(e.run_id == "r1");
    CHECK(a.histogram("fig3_sentence_jaccard") != nullptr);
    CHECK(a.histogram("table2_sentence_frequency") != nullptr);
    CHECK(a.corpus_version == corpus_version(corpus));

    auto const target = *a.accounts(Method::search1).begin();
    SuppressionList list;
    list.add(target, SuppressionCategory::board_member, "editorial board");
    auto const c = run_all(corpus, config, list, rules, "r2");
    CHECK(c.suppression_version == 1);
    REQUIRE_FALSE(c.suppressed.empty());
    for (auto const& e : c.suppressed) {
        CHECK(e.suppressed);
        CHECK(e.touches(target));
    }
    for (auto const& e : c.evidence) CHECK_FALSE(e.touches(target));
    CHECK(c.evidence.size() + c.suppressed.size() == a.evidence.size());
}

TEST_CASE("run_all runs only the selected searches") {
    auto const corpus = random_corpus(42, 100, 10);
    SearchConfig config;
    config.searches = {Method::search2, Method::search3};
    auto const run = run_all(corpus, config, SuppressionList{}, ExclusionRules::defaults());
    CHECK(run.methods_run() == std::set<Method>{Method::search2, Method::search3});
    for (auto const& e : run.evidence) {
        CHECK((e.method == Method::search2 || e.method == Method::search3));
    }
}
