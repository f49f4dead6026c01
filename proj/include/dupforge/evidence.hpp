#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/similarity.hpp"

namespace dupforge {

enum class Method { search1 = 1, search2, search3, search4, search5, search6 };

inline constexpr std::array<Method, 6> all_methods{Method::search1, Method::search2, Method::search3,
                                                  Method::search4, Method::search5, Method::search6};

inline std::string to_string(Method m) { return "search" + std::to_string(static_cast<int>(m)); }

inline std::optional<Method> parse_method(std::string_view s) {
    for (auto m : all_methods) {
        if (to_string(m) == s) {
            return m;
        }
    }
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '6') {
        return static_cast<Method>(s[0] - '0');
    }
    return std::nullopt;
}

/// One finding that two referee accounts produced duplicated text.
struct PairEvidence {
    std::string account_a;  // account_a < account_b
    std::string account_b;
    Method method = Method::search1;
    SimilarityScore score;
    std::vector<std::string> comment_ids;  // sorted
    std::vector<std::string> matched_spans;
    std::string run_id;
    bool suppressed = false;
    /// Search 4 only: every metric's value and the metrics whose keep-set
    /// admitted the pair.
    std::map<Metric, double> metrics;
    std::vector<Metric> kept_by;

    [[nodiscard]] bool touches(std::string const& uid) const { return account_a == uid || account_b == uid; }

    friend bool operator<(PairEvidence const& x, PairEvidence const& y) {
        return std::tie(x.method, x.account_a, x.account_b, x.comment_ids, x.matched_spans) <
               std::tie(y.method, y.account_a, y.account_b, y.comment_ids, y.matched_spans);
    }
    bool operator==(PairEvidence const&) const = default;
};

/// Orders the accounts and comment ids; throws if both accounts are equal.
inline PairEvidence make_evidence(std::string a, std::string b, Method method, SimilarityScore score,
                                  std::vector<std::string> comment_ids, std::vector<std::string> spans = {}) {
    if (a == b) {
        throw std::logic_error("evidence cannot link an account to itself: " + a);
    }
    if (b < a) {
        std::swap(a, b);
    }
    std::sort(comment_ids.begin(), comment_ids.end());
    comment_ids.erase(std::unique(comment_ids.begin(), comment_ids.end()), comment_ids.end());
    PairEvidence e;
    e.account_a = std::move(a);
    e.account_b = std::move(b);
    e.method = method;
    e.score = score;
    e.comment_ids = std::move(comment_ids);
    e.matched_spans = std::move(spans);
    return e;
}

inline nlohmann::json to_json(PairEvidence const& e) {
    nlohmann::json j{{"account_a", e.account_a},
                     {"account_b", e.account_b},
                     {"method", to_string(e.method)},
                     {"metric", to_string(e.score.metric)},
                     {"score", e.score.value},
                     {"comment_ids", e.comment_ids},
                     {"matched_spans", e.matched_spans},
                     {"run_id", e.run_id},
                     {"suppressed", e.suppressed}};
    if (!e.metrics.empty()) {
        nlohmann::json m = nlohmann::json::object();
        for (auto const& [metric, v] : e.metrics) {
            m[std::string(to_string(metric))] = v;
        }
        j["metrics"] = m;
        auto kept = nlohmann::json::array();
        for (auto metric : e.kept_by) {
            kept.push_back(to_string(metric));
        }
        j["kept_by"] = kept;
    }
    return j;
}

inline PairEvidence evidence_from_json(nlohmann::json const& j) {
    PairEvidence e;
    e.account_a = j.at("account_a").get<std::string>();
    e.account_b = j.at("account_b").get<std::string>();
    auto const method = parse_method(j.at("method").get<std::string>());
    auto const metric = parse_metric(j.at("metric").get<std::string>());
    if (!method || !metric) {
        throw std::invalid_argument("bad evidence record");
    }
    e.method = *method;
    e.score = {*metric, j.at("score").get<double>()};
    e.comment_ids = j.at("comment_ids").get<std::vector<std::string>>();
    e.matched_spans = j.at("matched_spans").get<std::vector<std::string>>();
    e.run_id = j.value("run_id", std::string());
    e.suppressed = j.value("suppressed", false);
    if (j.contains("metrics")) {
        for (auto const& [k, v] : j["metrics"].items()) {
            e.metrics[*parse_metric(k)] = v.get<double>();
        }
        for (auto const& k : j.at("kept_by")) {
            e.kept_by.push_back(*parse_metric(k.get<std::string>()));
        }
    }
    return e;
}

/// Sorted, duplicate-free.
inline void canonicalize(std::vector<PairEvidence>& ev) {
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
}

/// Accounts appearing in any of `ev`.
inline std::set<std::string> accounts_of(std::vector<PairEvidence> const& ev) {
    std::set<std::string> out;
    for (auto const& e : ev) {
        out.insert(e.account_a);
        out.insert(e.account_b);
    }
    return out;
}

inline std::set<std::string> accounts_of(std::vector<PairEvidence> const& ev, Method m) {
    std::set<std::string> out;
    for (auto const& e : ev) {
        if (e.method == m) {
            out.insert(e.account_a);
            out.insert(e.account_b);
        }
    }
    return out;
}

}  // namespace dupforge
