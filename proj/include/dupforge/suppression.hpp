#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/evidence.hpp"
#include "dupforge/pseudonym.hpp"

// Curated false-positive exclusions. The list is an append-only log of add
// and revoke operations; its version is the number of operations.

namespace dupforge {

enum class SuppressionCategory { board_member, practice_document, duplicate_account, other };

inline std::string_view to_string(SuppressionCategory c) {
    switch (c) {
    case SuppressionCategory::board_member: return "board_member";
    case SuppressionCategory::practice_document: return "practice_document";
    case SuppressionCategory::duplicate_account: return "duplicate_account";
    case SuppressionCategory::other: return "other";
    }
    return "other";
}

inline std::optional<SuppressionCategory> parse_suppression_category(std::string_view s) {
    for (auto c : {SuppressionCategory::board_member, SuppressionCategory::practice_document,
                   SuppressionCategory::duplicate_account, SuppressionCategory::other}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    return std::nullopt;
}

/// An account, or an account pair when `account_b` is set.
struct SuppressionEntry {
    std::uint64_t id = 0;
    std::string account;
    std::string account_b;
    SuppressionCategory category = SuppressionCategory::other;
    std::string reason;
    std::string created_at;
    std::uint64_t version = 0;  // list version right after this entry was added

    [[nodiscard]] bool is_pair() const noexcept { return !account_b.empty(); }
};

class SuppressionList {
public:
    SuppressionList() = default;
    SuppressionList(SuppressionList const& other) {
        std::lock_guard lock(other.mutex_);
        log_ = other.log_;
        active_ = other.active_;
        next_id_ = other.next_id_;
    }
    SuppressionList& operator=(SuppressionList const& other) {
        if (this != &other) {
            std::scoped_lock lock(mutex_, other.mutex_);
            log_ = other.log_;
            active_ = other.active_;
            next_id_ = other.next_id_;
        }
        return *this;
    }

    /// Returns the new entry. Throws on an empty reason or account.
    SuppressionEntry add(std::string account, SuppressionCategory category, std::string reason,
                         std::string account_b = {}) {
        if (account.empty()) {
            throw std::invalid_argument("suppression needs an account");
        }
        if (reason.empty()) {
            throw std::invalid_argument("suppression needs a reason");
        }
        if (!account_b.empty() && account_b < account) {
            std::swap(account, account_b);
        }
        if (account == account_b) {
            throw std::invalid_argument("suppressed pair must name two accounts");
        }
        std::lock_guard lock(mutex_);
        SuppressionEntry e{next_id_++, std::move(account), std::move(account_b), category, std::move(reason),
                           utc_now_iso(), log_.size() + 1};
        log_.push_back({"add", e});
        active_.emplace(e.id, e);
        return e;
    }

    /// False when `id` is not active.
    bool revoke(std::uint64_t id) {
        std::lock_guard lock(mutex_);
        auto it = active_.find(id);
        if (it == active_.end()) {
            return false;
        }
        auto e = it->second;
        e.version = log_.size() + 1;
        e.created_at = utc_now_iso();
        log_.push_back({"revoke", e});
        active_.erase(it);
        return true;
    }

    [[nodiscard]] std::uint64_t version() const {
        std::lock_guard lock(mutex_);
        return log_.size();
    }

    [[nodiscard]] std::vector<SuppressionEntry> active() const {
        std::lock_guard lock(mutex_);
        std::vector<SuppressionEntry> out;
        for (auto const& [id, e] : active_) {
            out.push_back(e);
        }
        return out;
    }

    [[nodiscard]] bool account_suppressed(std::string const& uid) const {
        std::lock_guard lock(mutex_);
        for (auto const& [id, e] : active_) {
            if (!e.is_pair() && e.account == uid) {
                return true;
            }
        }
        return false;
    }

    /// True when the evidence touches a suppressed account or is exactly a
    /// suppressed pair.
    [[nodiscard]] bool suppresses(PairEvidence const& ev) const {
        std::lock_guard lock(mutex_);
        for (auto const& [id, e] : active_) {
            if (e.is_pair() ? (e.account == ev.account_a && e.account_b == ev.account_b) : ev.touches(e.account)) {
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] bool suppresses_pair(std::string a, std::string b) const {
        if (b < a) {
            std::swap(a, b);
        }
        PairEvidence probe;
        probe.account_a = std::move(a);
        probe.account_b = std::move(b);
        return suppresses(probe);
    }

    /// Rewrites the full log; suppression.jsonl holds one operation per line.
    void save(std::filesystem::path const& path) const {
        std::lock_guard lock(mutex_);
        std::ofstream out(path, std::ios::trunc);
        for (auto const& op : log_) {
            out << op_json(op).dump() << '\n';
        }
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
    }

    static SuppressionList load(std::filesystem::path const& path) {
        SuppressionList list;
        std::ifstream in(path);
        if (!in) {
            return list;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            auto const j = nlohmann::json::parse(line);
            SuppressionEntry e;
            e.id = j.at("id").get<std::uint64_t>();
            e.account = j.at("account").get<std::string>();
            e.account_b = j.value("account_b", std::string());
            auto const cat = parse_suppression_category(j.at("category").get<std::string>());
            if (!cat) {
                throw std::runtime_error("bad suppression category in " + path.string());
            }
            e.category = *cat;
            e.reason = j.at("reason").get<std::string>();
            e.created_at = j.value("at", std::string());
            e.version = j.at("version").get<std::uint64_t>();
            auto const op = j.at("op").get<std::string>();
            list.log_.push_back({op, e});
            if (op == "add") {
                list.active_[e.id] = e;
                list.next_id_ = std::max(list.next_id_, e.id + 1);
            } else {
                list.active_.erase(e.id);
            }
        }
        return list;
    }

    static nlohmann::json to_json(SuppressionEntry const& e) {
        nlohmann::json j{{"id", e.id},
                         {"account", e.account},
                         {"category", to_string(e.category)},
                         {"reason", e.reason},
                         {"at", e.created_at},
                         {"version", e.version}};
        if (e.is_pair()) {
            j["account_b"] = e.account_b;
        }
        return j;
    }

private:
    struct Operation {
        std::string op;
        SuppressionEntry entry;
    };

    static nlohmann::json op_json(Operation const& op) {
        auto j = to_json(op.entry);
        j["op"] = op.op;
        return j;
    }

    mutable std::mutex mutex_;
    std::vector<Operation> log_;
    std::map<std::uint64_t, SuppressionEntry> active_;
    std::uint64_t next_id_ = 1;
};

/// Splits `ev` into kept and suppressed items; suppressed ones are flagged.
inline std::pair<std::vector<PairEvidence>, std::vector<PairEvidence>> apply_suppression(
    std::vector<PairEvidence> ev, SuppressionList const& list) {
    std::vector<PairEvidence> kept;
    std::vector<PairEvidence> dropped;
    for (auto& e : ev) {
        if (list.suppresses(e)) {
            e.suppressed = true;
            dropped.push_back(std::move(e));
        } else {
            e.suppressed = false;
            kept.push_back(std::move(e));
        }
    }
    return {std::move(kept), std::move(dropped)};
}

}  // namespace dupforge
