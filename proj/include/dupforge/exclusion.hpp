#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/unicode.hpp"

// Rules for innocent duplication: stock phrases, special collection titles,
// template subheadings, pasted references and journal template text.

namespace dupforge {

enum class RuleCategory { convergence, collection_title, subheading, reference, journal_template };

inline std::string_view to_string(RuleCategory c) {
    switch (c) {
    case RuleCategory::convergence: return "convergence";
    case RuleCategory::collection_title: return "collection_title";
    case RuleCategory::subheading: return "subheading";
    case RuleCategory::reference: return "reference";
    case RuleCategory::journal_template: return "journal_template";
    }
    return "convergence";
}

inline std::optional<RuleCategory> parse_rule_category(std::string_view s) {
    for (auto c : {RuleCategory::convergence, RuleCategory::collection_title, RuleCategory::subheading,
                   RuleCategory::reference, RuleCategory::journal_template}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    return std::nullopt;
}

/// Lowercased, whitespace-collapsed form with trailing punctuation removed;
/// the key verbatim rules are compared under.
inline std::string rule_key(std::string_view sentence) {
    auto u = unicode::to_lower(unicode::to_u32(sentence));
    std::u32string out;
    for (char32_t c : u) {
        if (unicode::is_space(c)) {
            if (!out.empty() && out.back() != U' ') {
                out.push_back(U' ');
            }
        } else {
            out.push_back(c);
        }
    }
    while (!out.empty() && (out.back() == U' ' || unicode::is_punct(out.back()))) {
        out.pop_back();
    }
    return unicode::to_utf8(out);
}

struct ExclusionRule {
    enum class Kind { verbatim, regex };

    RuleCategory category = RuleCategory::convergence;
    Kind kind = Kind::verbatim;
    std::string pattern;
    std::string journal;  // journal_template rules only; empty matches any journal
};

class ExclusionRules {
public:
    ExclusionRules() = default;

    /// Built-in stock phrases and patterns.
    static ExclusionRules defaults() {
        ExclusionRules r;
        for (auto const* s : {"This is an interesting paper.",
                              "This is an interesting study.",
                              "This is an interesting manuscript.",
                              "Thank you for the opportunity to review this paper.",
                              "Thank you for the opportunity to review this manuscript.",
                              "Thank you for giving me the opportunity to review this manuscript.",
                              "The paper is well written.",
                              "The manuscript is well written.",
                              "The authors have addressed all my comments.",
                              "The authors have addressed all of my comments.",
                              "I have no further comments.",
                              "No further comments.",
                              "I recommend acceptance.",
                              "I recommend publication in its current form.",
                              "Please see the attached file.",
                              "Please see attached."}) {
            r.add({RuleCategory::convergence, ExclusionRule::Kind::verbatim, s, {}});
        }
        // Question-style template subheadings.
        r.add({RuleCategory::subheading, ExclusionRule::Kind::regex,
               R"(^(is|are|does|do|did|was|were|has|have|can|could|should|would|will)\b[^.!?]{0,160}\?$)", {}});
        // Reference list entries: a DOI, or an author list with initials
        // followed by a year.
        r.add({RuleCategory::reference, ExclusionRule::Kind::regex, R"((\bdoi:\s*|\b)10\.\d{4,9}/\S+)", {}});
        r.add({RuleCategory::reference, ExclusionRule::Kind::regex,
               R"(^(\[\d+\]\s*|\d+\.\s+)?[a-z][a-z'-]+,? ([a-z]\.\s?)+(,? (and |& )?[a-z][a-z'-]+,? ([a-z]\.\s?)+)*(,? et al\.?)?,? \(?(19|20)\d{2}[a-z]?\)?[.,])",
               {}});
        r.add({RuleCategory::collection_title, ExclusionRule::Kind::regex,
               R"((submitted|invited|considered|contribution) (to|for) (the |this |a )?special (issue|collection|section))",
               {}});
        r.add({RuleCategory::collection_title, ExclusionRule::Kind::regex,
               R"(special (issue|collection|section) (on|entitled|titled|about)\b)", {}});
        for (auto& entry : r.regexes_) {
            entry.builtin = true;
        }
        return r;
    }

    void add(ExclusionRule rule) {
        if (rule.pattern.empty()) {
            throw std::invalid_argument("exclusion rule with empty pattern");
        }
        if (rule.kind == ExclusionRule::Kind::verbatim) {
            verbatim_.push_back({rule_key(rule.pattern), rules_.size()});
            std::sort(verbatim_.begin(), verbatim_.end());
        } else {
            regexes_.push_back({std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase |
                                                              std::regex::optimize),
                                rules_.size(), false});
        }
        rules_.push_back(std::move(rule));
    }

    [[nodiscard]] std::vector<ExclusionRule> const& rules() const noexcept { return rules_; }
    [[nodiscard]] bool empty() const noexcept { return rules_.empty(); }

    /// First matching rule, verbatim rules before patterns.
    [[nodiscard]] std::optional<ExclusionRule> match(std::string_view sentence, std::string_view journal = {}) const {
        auto const key = rule_key(sentence);
        auto it = std::lower_bound(verbatim_.begin(), verbatim_.end(), std::pair<std::string, std::size_t>{key, 0});
        for (; it != verbatim_.end() && it->first == key; ++it) {
            auto const& rule = rules_[it->second];
            if (rule.journal.empty() || rule.journal == journal) {
                return rule;
            }
        }
        std::string const text(sentence);
        for (auto const& [re, idx, builtin] : regexes_) {
            auto const& rule = rules_[idx];
            if (!rule.journal.empty() && rule.journal != journal) {
                continue;
            }
            if (builtin && !prefilter(rule.category, key, sentence)) {
                continue;
            }
            if (std::regex_search(text, re)) {
                return rule;
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::optional<RuleCategory> category(std::string_view sentence, std::string_view journal = {}) const {
        auto r = match(sentence, journal);
        return r ? std::optional(r->category) : std::nullopt;
    }

    nlohmann::json to_json() const {
        auto arr = nlohmann::json::array();
        for (auto const& r : rules_) {
            nlohmann::json j{{"category", to_string(r.category)},
                             {"kind", r.kind == ExclusionRule::Kind::verbatim ? "verbatim" : "regex"},
                             {"pattern", r.pattern}};
            if (!r.journal.empty()) {
                j["journal"] = r.journal;
            }
            arr.push_back(std::move(j));
        }
        return {{"rules", arr}};
    }

    /// Appends rules from `{"rules": [{"category", "kind", "pattern", "journal"?}]}`.
    void add_json(nlohmann::json const& j) {
        for (auto const& r : j.at("rules")) {
            auto const cat = parse_rule_category(r.at("category").get<std::string>());
            if (!cat) {
                throw std::invalid_argument("unknown rule category: " + r.at("category").get<std::string>());
            }
            auto const kind = r.value("kind", std::string("verbatim"));
            if (kind != "verbatim" && kind != "regex") {
                throw std::invalid_argument("unknown rule kind: " + kind);
            }
            add({*cat, kind == "regex" ? ExclusionRule::Kind::regex : ExclusionRule::Kind::verbatim,
                 r.at("pattern").get<std::string>(), r.value("journal", std::string())});
        }
    }

    void add_file(std::filesystem::path const& path) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error("cannot read exclusion rules " + path.string());
        }
        add_json(nlohmann::json::parse(in));
    }

private:
    struct CompiledRule {
        std::regex re;
        std::size_t index;
        bool builtin;
    };

    // Necessary conditions of the built-in patterns; they spare most
    // sentences a regex run.
    static bool prefilter(RuleCategory c, std::string_view key, std::string_view sentence) {
        switch (c) {
        case RuleCategory::subheading: return !sentence.empty() && sentence.back() == '?';
        case RuleCategory::reference: return std::any_of(key.begin(), key.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
        case RuleCategory::collection_title: return key.find("special") != std::string_view::npos;
        default: return true;
        }
    }

    std::vector<ExclusionRule> rules_;
    std::vector<std::pair<std::string, std::size_t>> verbatim_;
    std::vector<CompiledRule> regexes_;
};

}  // namespace dupforge
