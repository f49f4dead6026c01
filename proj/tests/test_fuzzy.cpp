#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "dupforge/fuzzy.hpp"

using namespace dupforge;
using Catch::Matchers::WithinAbs;

namespace {

// Textbook O(nm) dynamic programme; independent of the bit-parallel path.
std::size_t lcs_oracle(std::u32string const& a, std::u32string const& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            d[i + 1][j + 1] = a[i] == b[j] ? d[i][j] + 1 : std::max(d[i][j + 1], d[i + 1][j]);
        }
    }
    return d[a.size()][b.size()];
}

double ratio_oracle(std::u32string const& a, std::u32string const& b) {
    if (a.empty() && b.empty()) return 100.0;
    return 100.0 * 2.0 * static_cast<double>(lcs_oracle(a, b)) / static_cast<double>(a.size() + b.size());
}

double partial_oracle(std::u32string a, std::u32string b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty() ? 100.0 : 0.0;
    if (a.size() > b.size()) std::swap(a, b);
    double best = 0;
    for (std::size_t l = 0; l + a.size() <= b.size(); ++l) {
        best = std::max(best, ratio_oracle(a, b.substr(l, a.size())));
    }
    return best;
}

std::u32string random_string(std::mt19937_64& rng, std::size_t n, char32_t lo, char32_t hi) {
    std::uniform_int_distribution<uint32_t> d(lo, hi);
    std::u32string s(n, U' ');
    for (auto& c : s) c = d(rng);
    return s;
}

void all_strings(std::size_t max_len, std::vector<std::u32string>& out) {
    out.push_back(U"");
    std::vector<std::u32string> layer{U""};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<std::u32string> next;
        for (auto const& s : layer) {
            for (char32_t c : {U'a', U'b', U'c'}) next.push_back(s + c);
        }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
}

}  // namespace

TEST_CASE("indel_ratio examples") {
    CHECK_THAT(fuzzy::indel_ratio("abc", "abd"), WithinAbs(66.67, 0.01));
    CHECK(fuzzy::indel_ratio("", "") == 100.0);
    CHECK(fuzzy::indel_ratio("", "x") == 0.0);
    CHECK(fuzzy::indel_ratio("same", "same") == 100.0);
}

TEST_CASE("partial_ratio examples") {
    CHECK(fuzzy::partial_ratio("cat", "the cat sat") == 100.0);
    CHECK(fuzzy::partial_ratio("the cat sat", "cat") == 100.0);
    CHECK(fuzzy::partial_ratio("abc", "abd") == fuzzy::indel_ratio("abc", "abd"));
    CHECK(fuzzy::partial_ratio("", "") == 100.0);
    CHECK(fuzzy::partial_ratio("x", "") == 0.0);
}

TEST_CASE("token_sort_ratio examples") {
    CHECK(fuzzy::token_sort_ratio("review solid a", "a solid review") == 100.0);
    CHECK(fuzzy::token_sort_ratio("Solid  REVIEW", "review solid") == 100.0);
    CHECK(fuzzy::token_sort_ratio("   ", "") == 100.0);
}

TEST_CASE("bit-parallel LCS equals DP oracle across block boundaries") {
    std::mt19937_64 rng(99);
    for (std::size_t n : {1UL, 31UL, 63UL, 64UL, 65UL, 127UL, 128UL, 129UL, 300UL}) {
        for (int t = 0; t < 20; ++t) {
            auto const a = random_string(rng, n, U'a', U'd');
            auto const b = random_string(rng, n / 2 + 7, U'a', U'd');
            REQUIRE(fuzzy::lcs_length(a, b) == lcs_oracle(a, b));
        }
    }
    // Non-ASCII code points take the hashed path.
    for (int t = 0; t < 50; ++t) {
        auto const a = random_string(rng, 90, 0x3B1, 0x3B5);
        auto const b = random_string(rng, 70, 0x3B1, 0x3B5);
        REQUIRE(fuzzy::lcs_length(a, b) == lcs_oracle(a, b));
    }
}

TEST_CASE("window LCS by seaweed combing equals per-window oracle") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    for (int t = 0; t < 300; ++t) {
        auto a = random_string(rng, len(rng), U'a', U'c');
        auto b = random_string(rng, len(rng), U'a', U'c');
        if (a.size() > b.size()) std::swap(a, b);
        auto const got = fuzzy::window_lcs(a, b);
        REQUIRE(got.size() == b.size() - a.size() + 1);
        for (std::size_t l = 0; l < got.size(); ++l) {
            REQUIRE(got[l] == lcs_oracle(a, b.substr(l, a.size())));
        }
    }
}

TEST_CASE("partial_ratio equals brute-force window oracle") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> len(1, 70);
    for (int t = 0; t < 400; ++t) {
        auto const a = random_string(rng, len(rng), U'a', U'd');
        auto const b = random_string(rng, len(rng), U'a', U'd');
        REQUIRE(fuzzy::partial_ratio(a, b) == partial_oracle(a, b));
    }
}

TEST_CASE("partial_ratio of an embedded string is 100") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> len(0, 50);
    for (int t = 0; t < 1000; ++t) {
        auto const a = random_string(rng, len(rng) + 1, U'a', U'z');
        auto const x = random_string(rng, len(rng), U'a', U'z');
        auto const y = random_string(rng, len(rng), U'a', U'z');
        REQUIRE(fuzzy::partial_ratio(a, x + a + y) == 100.0);
    }
}

TEST_CASE("indel_ratio equals LCS oracle on all short strings over {a,b,c}", "[slow]") {
    // Every pair up to length 6, plus random pairs up to length 12.
    std::vector<std::u32string> strings;
    all_strings(6, strings);
    for (std::size_t i = 0; i < strings.size(); i += 3) {
        for (std::size_t j = 0; j < strings.size(); j += 5) {
            REQUIRE(fuzzy::indel_ratio(strings[i], strings[j]) == ratio_oracle(strings[i], strings[j]));
        }
    }
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> len(0, 12);
    for (int t = 0; t < 20000; ++t) {
        auto const a = random_string(rng, len(rng), U'a', U'c');
        auto const b = random_string(rng, len(rng), U'a', U'c');
        REQUIRE(fuzzy::indel_ratio(a, b) == ratio_oracle(a, b));
    }
}
