#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dupforge/evidence.hpp"
#include "dupforge/exclusion.hpp"
#include "dupforge/suppression.hpp"

using namespace dupforge;

TEST_CASE("convergence phrases match regardless of case, spacing and final punctuation") {
    auto const rules = ExclusionRules::defaults();
    CHECK(rules.category("This is an interesting paper.") == RuleCategory::convergence);
    CHECK(rules.category("this is an  INTERESTING paper") == RuleCategory::convergence);
    CHECK(rules.category("This is an interesting paper!") == RuleCategory::convergence);
    CHECK_FALSE(rules.category("This is an interesting paper about mice."));
}

TEST_CASE("pattern rules cover subheadings, references and collection titles") {
    auto const rules = ExclusionRules::defaults();
    CHECK(rules.category("Is the methodology sound?") == RuleCategory::subheading);
    CHECK(rules.category("Are the conclusions supported by the data?") == RuleCategory::subheading);
    CHECK_FALSE(rules.category("Why did the authors choose this cohort?"));
    CHECK_FALSE(rules.category("Is the methodology sound."));

    CHECK(rules.category("See doi:10.1000/xyz123 for details.") == RuleCategory::reference);
    CHECK(rules.category("10.1038/nature12373.") == RuleCategory::reference);
    CHECK(rules.category("Smith, J., and Jones, A. B. (2019). A study of things.") == RuleCategory::reference);
    CHECK(rules.category("Smith J. 2019.") == RuleCategory::reference);
    CHECK_FALSE(rules.category("In 2019, the authors published a related study."));
    CHECK_FALSE(rules.category("Table 2 lists 10.5 percent of cases."));

    CHECK(rules.category("This paper was submitted to the special issue on soil health.") ==
          RuleCategory::collection_title);
    CHECK(rules.category("Special collection entitled Advances in Catalysis.") == RuleCategory::collection_title);
    CHECK_FALSE(rules.category("The special cases are not discussed."));
}

TEST_CASE("journal template rules apply only to their journal") {
    ExclusionRules rules;
    rules.add({RuleCategory::journal_template, ExclusionRule::Kind::verbatim, "Please rate the novelty.", "j7"});
    CHECK(rules.category("Please rate the novelty.", "j7") == RuleCategory::journal_template);
    CHECK_FALSE(rules.category("Please rate the novelty.", "j8"));
    CHECK_FALSE(rules.category("Please rate the novelty."));
}

TEST_CASE("rules load from JSON and reject unknown categories") {
    ExclusionRules rules;
    rules.add_json(json::parse(R"({"rules": [{"category": "convergence", "pattern": "Looks good."},
                                             {"category": "subheading", "kind": "regex", "pattern": "^section \\d+$"}]})"));
    CHECK(rules.rules().size() == 2);
    CHECK(rules.category("looks good") == RuleCategory::convergence);
    CHECK(rules.category("Section 4") == RuleCategory::subheading);
    CHECK_THROWS_AS(rules.add_json(json::parse(R"({"rules": [{"category": "nope", "pattern": "x"}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(rules.add({RuleCategory::convergence, ExclusionRule::Kind::verbatim, "", {}}),
                    std::invalid_argument);

    ExclusionRules copy;
    copy.add_json(rules.to_json());
    CHECK(copy.to_json() == rules.to_json());
}

TEST_CASE("evidence orders accounts and round-trips through JSON") {
    auto e = make_evidence("uid9", "uid2", Method::search4, {Metric::partial_ratio, 97.5}, {"c3", "c1", "c3"},
                           {"span"});
    CHECK(e.account_a == "uid2");
    CHECK(e.account_b == "uid9");
    CHECK(e.comment_ids == std::vector<std::string>{"c1", "c3"});
    e.metrics[Metric::partial_ratio] = 97.5;
    e.metrics[Metric::indel_ratio] = 80;
    e.kept_by = {Metric::partial_ratio};
    e.run_id = "r";
    CHECK(evidence_from_json(to_json(e)) == e);
    CHECK_THROWS_AS(make_evidence("uid1", "uid1", Method::search1, {}, {}), std::logic_error);
    CHECK(parse_method("3") == Method::search3);
    CHECK(parse_method("search6") == Method::search6);
    CHECK_FALSE(parse_method("search7"));
}

TEST_CASE("canonicalize sorts and removes duplicates") {
    std::vector<PairEvidence> ev{make_evidence("uid2", "uid3", Method::search2, {}, {"c1", "c2"}),
                                 make_evidence("uid1", "uid2", Method::search2, {}, {"c1", "c2"}),
                                 make_evidence("uid1", "uid2", Method::search1, {}, {"c1", "c2"}),
                                 make_evidence("uid2", "uid3", Method::search2, {}, {"c1", "c2"})};
    canonicalize(ev);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].method == Method::search1);
    CHECK(ev[1].account_a == "uid1");
    CHECK(accounts_of(ev, Method::search2) == std::set<std::string>{"uid1", "uid2", "uid3"});
}

TEST_CASE("suppression filters accounts and pairs and survives reload") {
    SuppressionList list;
    auto const board = list.add("uid5", SuppressionCategory::board_member, "editorial board member");
    auto const pair = list.add("uid9", SuppressionCategory::duplicate_account, "same person", "uid3");
    CHECK(pair.account == "uid3");
    CHECK(list.version() == 2);
    CHECK(list.account_suppressed("uid5"));
    CHECK_FALSE(list.account_suppressed("uid3"));
    CHECK(list.suppresses_pair("uid9", "uid3"));
    CHECK_FALSE(list.suppresses_pair("uid3", "uid4"));
    CHECK_THROWS_AS(list.add("uid1", SuppressionCategory::other, ""), std::invalid_argument);
    CHECK_THROWS_AS(list.add("uid1", SuppressionCategory::other, "x", "uid1"), std::invalid_argument);

    std::vector<PairEvidence> ev{make_evidence("uid5", "uid6", Method::search1, {}, {"c1", "c2"}),
                                 make_evidence("uid3", "uid9", Method::search1, {}, {"c3", "c4"}),
                                 make_evidence("uid3", "uid4", Method::search1, {}, {"c5", "c6"})};
    auto [kept, dropped] = apply_suppression(ev, list);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].account_b == "uid4");
    REQUIRE(dropped.size() == 2);
    CHECK(dropped[0].suppressed);

    CHECK(list.revoke(board.id));
    CHECK_FALSE(list.revoke(board.id));
    CHECK(list.version() == 3);
    CHECK_FALSE(list.account_suppressed("uid5"));

    auto const path = std::filesystem::temp_directory_path() / "dupforge_suppression.jsonl";
    list.save(path);
    auto const loaded = SuppressionList::load(path);
    CHECK(loaded.version() == 3);
    CHECK(loaded.active().size() == 1);
    CHECK(loaded.suppresses_pair("uid3", "uid9"));
    CHECK(parse_suppression_category("practice_document") == SuppressionCategory::practice_document);
}
