#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dupforge/text_index.hpp"

using namespace dupforge;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<IndexDocument> zipf_docs(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
    std::vector<double> w(vocab);
    for (std::size_t i = 0; i < vocab; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> word(w.begin(), w.end());
    std::uniform_int_distribution<std::size_t> len(0, 80);
    std::vector<IndexDocument> docs;
    for (std::size_t d = 0; d < n; ++d) {
        std::string text;
        for (std::size_t i = 0, m = len(rng); i < m; ++i) {
            text += "w" + std::to_string(word(rng)) + " ";
        }
        docs.push_back({"doc" + std::to_string(d), text, std::nullopt});
    }
    return docs;
}

std::string slurp(std::filesystem::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("analyzer lowercases and splits on non-alphanumerics") {
    CHECK(analyze("The cat, SAT; on-the mat.") == std::vector<std::string>{"the", "cat", "sat", "on", "the", "mat"});
    CHECK(analyze("Éte 2x  naïve") == std::vector<std::string>{"éte", "2x", "naïve"});
    CHECK(analyze(" ,.; ").empty());
}

TEST_CASE("postings for a single document") {
    auto const idx = InvertedIndex::build({{"d1", "cat sat", std::nullopt}}, Granularity::comment);
    CHECK(idx.postings("cat") == std::vector<Posting>{{0, 1}});
    CHECK(idx.postings("sat") == std::vector<Posting>{{0, 1}});
    CHECK(idx.postings("dog").empty());
    CHECK(idx.doc_count() == 1);
    CHECK(idx.avg_doc_length() == 2.0);
}

TEST_CASE("empty documents are indexed but never retrieved") {
    auto const idx = InvertedIndex::build({{"a", "", std::nullopt}, {"b", "cat", std::nullopt}}, Granularity::comment);
    CHECK(idx.doc_length(0) == 0);
    CHECK(idx.query("cat", 10) == std::vector<Hit>{{1, idx.score("cat", 1)}});
    CHECK(idx.query("dog", 10).empty());
    CHECK(idx.query("...", 10).empty());
    CHECK_THROWS_AS(idx.query("cat", 0), std::invalid_argument);
}

TEST_CASE("duplicate ids are rejected") {
    CHECK_THROWS_AS(InvertedIndex::build({{"a", "x", std::nullopt}, {"a", "y", std::nullopt}}, Granularity::comment),
                    std::invalid_argument);
}

TEST_CASE("BM25 scores match the formula-level reference") {
    std::ifstream in(std::string(DUPFORGE_TEST_DATA) + "/bm25_fixture.json");
    REQUIRE(in);
    auto const fixture = json::parse(in);
    std::vector<IndexDocument> docs;
    for (auto const& d : fixture["docs"]) {
        docs.push_back({d["id"].get<std::string>(), d["text"].get<std::string>(), std::nullopt});
    }
    auto const idx = InvertedIndex::build(docs, Granularity::comment);
    REQUIRE(idx.doc_count() == 100);
    for (auto const& q : fixture["queries"]) {
        auto const text = q["text"].get<std::string>();
        auto const& expected = q["scores"];
        for (std::uint32_t d = 0; d < idx.doc_count(); ++d) {
            double const want = expected.contains(idx.id(d)) ? expected[idx.id(d)].get<double>() : 0.0;
            REQUIRE_THAT(idx.score(text, d), WithinAbs(want, 1e-9));
        }
        auto const hits = idx.query(text, 100);
        REQUIRE(hits.size() == expected.size());
        for (auto const& h : hits) {
            REQUIRE_THAT(h.score, WithinAbs(expected[idx.id(h.doc)].get<double>(), 1e-9));
        }
    }
}

TEST_CASE("pruned top-k equals exhaustive ranking exactly") {
    std::mt19937_64 rng(8);
    auto const docs = zipf_docs(rng, 3000, 800);
    auto const idx = InvertedIndex::build(docs, Granularity::comment);
    std::uniform_int_distribution<std::size_t> pick(0, docs.size() - 1);
    for (int t = 0; t < 150; ++t) {
        auto const& text = docs[pick(rng)].text;
        auto const all = idx.exhaustive(text);
        for (std::size_t k : {1UL, 5UL, 20UL, 200UL}) {
            auto const got = idx.query(text, k);
            std::vector<Hit> const want(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(k, all.size())));
            REQUIRE(got == want);
        }
        if (!all.empty()) {
            double const theta = all.front().score * 0.6;
            std::vector<Hit> want;
            for (auto const& h : all) {
                if (h.score >= theta) want.push_back(h);
            }
            REQUIRE(idx.query_min_score(idx.prepare(text), theta) == want);
        }
    }
}

TEST_CASE("score is monotone in matching term frequency") {
    std::mt19937_64 rng(12);
    auto docs = zipf_docs(rng, 300, 100);
    docs[5].text = "w1 w2 w3 w4 w5 w6 w7 w8";
    auto const before = InvertedIndex::build(docs, Granularity::comment);
    docs[5].text = "w1 w2 w3 w1 w5 w6 w7 w8";
    auto const after = InvertedIndex::build(docs, Granularity::comment);
    CHECK(after.score("w1", 5) >= before.score("w1", 5));
    CHECK(after.avg_doc_length() == before.avg_doc_length());
}

TEST_CASE("every document retrieves itself first") {
    std::mt19937_64 rng(21);
    std::vector<IndexDocument> docs;
    std::uniform_int_distribution<int> ch('a', 'z');
    for (int d = 0; d < 2000; ++d) {
        std::string text;
        for (int w = 0; w < 12; ++w) {
            for (int c = 0; c < 5; ++c) text += static_cast<char>(ch(rng));
            text += ' ';
        }
        docs.push_back({"d" + std::to_string(d), text, std::nullopt});
    }
    auto const idx = InvertedIndex::build(docs, Granularity::comment);
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
        REQUIRE(idx.query(docs[d].text, 1).front().doc == d);
    }
}

TEST_CASE("index persistence round-trips") {
    std::mt19937_64 rng(3);
    auto const docs = zipf_docs(rng, 500, 200);
    auto const idx = InvertedIndex::build(docs, Granularity::comment);
    auto const dir = std::filesystem::temp_directory_path();
    idx.save(dir / "dupforge_test.idx");
    auto const loaded = InvertedIndex::load(dir / "dupforge_test.idx");
    loaded.save(dir / "dupforge_test2.idx");
    CHECK(slurp(dir / "dupforge_test.idx") == slurp(dir / "dupforge_test2.idx"));
    for (int i = 0; i < 50; ++i) {
        REQUIRE(loaded.query(docs[i].text, 20) == idx.query(docs[i].text, 20));
    }
    // Building twice gives the same bytes.
    InvertedIndex::build(docs, Granularity::comment).save(dir / "dupforge_test3.idx");
    CHECK(slurp(dir / "dupforge_test.idx") == slurp(dir / "dupforge_test3.idx"));
}

TEST_CASE("sentence index maps hits back to comments") {
    std::vector<Comment> comments(2);
    comments[0].comment_id = "c1";
    comments[0].referee_uid = "uid1";
    comments[0].sentences = {"The cohort is small.", "Please add a power analysis."};
    comments[1].comment_id = "c2";
    comments[1].referee_uid = "uid2";
    comments[1].sentences = {"Please add a power analysis."};
    Corpus const corpus(comments, {}, {}, {});
    auto const idx = build_sentence_index(corpus);
    REQUIRE(idx.doc_count() == 3);
    auto const hits = idx.query("Please add a power analysis.", 10);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].score == hits[1].score);
    CHECK(idx.sentence(hits[0].doc).comment_id == "c1");
    CHECK(idx.sentence(hits[0].doc).ordinal == 1);
    CHECK(idx.sentence(hits[1].doc).referee_uid == "uid2");
    CHECK(idx.id(hits[1].doc) == "c2#0");

    auto const dir = std::filesystem::temp_directory_path();
    idx.save(dir / "dupforge_sent.idx");
    CHECK(InvertedIndex::load(dir / "dupforge_sent.idx").sentence(2).comment_id == "c2");
}
