#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

#include "dupforge/corpus.hpp"
#include "dupforge/pseudonym.hpp"
#include "dupforge/report.hpp"
#include "dupforge/search.hpp"
#include "dupforge/suppression.hpp"

namespace dupforge {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<unsigned char const*>(data.data()), data.size(), digest);
    std::string out;
    char buf[3];
    for (auto b : digest) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        out += buf;
    }
    return out;
}

inline std::string read_file(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(std::filesystem::path const& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw StoreError("cannot write " + path.string());
    }
}

// ---------------------------------------------------------------------------
// RunRecord JSON.

inline nlohmann::json to_json(SearchTiming const& t) {
    return {{"search", to_string(t.method)},
            {"time_to_index_s", t.index_seconds},
            {"time_to_search_s", t.search_seconds},
            {"accounts_found", t.accounts_found},
            {"evidence", t.evidence_count}};
}

inline SearchTiming timing_from_json(nlohmann::json const& j) {
    auto const m = parse_method(j.at("search").get<std::string>());
    if (!m) {
        throw StoreError("unknown search in timings: " + j.at("search").dump());
    }
    return {*m, j.at("time_to_index_s").get<double>(), j.at("time_to_search_s").get<double>(),
            j.at("accounts_found").get<std::size_t>(), j.at("evidence").get<std::size_t>()};
}

inline nlohmann::json to_json(SentenceFrequencyRow const& r) {
    nlohmann::json j{{"sentence", r.sentence},
                     {"occurrences", r.occurrences},
                     {"referees", r.referees},
                     {"journals", r.journals}};
    j["excluded_by"] = r.excluded_by ? nlohmann::json(std::string(to_string(*r.excluded_by))) : nlohmann::json();
    return j;
}

inline SentenceFrequencyRow sentence_row_from_json(nlohmann::json const& j) {
    SentenceFrequencyRow r{j.at("sentence").get<std::string>(), j.at("occurrences").get<std::size_t>(),
                           j.at("referees").get<std::size_t>(), j.at("journals").get<std::size_t>(), std::nullopt};
    if (!j.at("excluded_by").is_null()) {
        r.excluded_by = parse_rule_category(j.at("excluded_by").get<std::string>());
    }
    return r;
}

/// Run metadata without the evidence lists.
inline nlohmann::json run_summary_json(RunRecord const& run) {
    auto timings = nlohmann::json::array();
    for (auto const& t : run.timings) {
        timings.push_back(to_json(t));
    }
    return {{"run_id", run.run_id},
            {"status", to_string(run.status)},
            {"error", run.error},
            {"created_at", run.created_at},
            {"corpus_version", run.corpus_version},
            {"suppression_version", run.suppression_version},
            {"config", run.config},
            {"timings", timings},
            {"evidence_count", run.evidence.size()},
            {"suppressed_count", run.suppressed.size()},
            {"warnings", run.warnings}};
}

inline std::string evidence_jsonl(std::vector<PairEvidence> const& ev) {
    std::string out;
    for (auto const& e : ev) {
        out += to_json(e).dump() + "\n";
    }
    return out;
}

inline std::vector<PairEvidence> evidence_from_jsonl(std::string const& text) {
    std::vector<PairEvidence> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(evidence_from_json(nlohmann::json::parse(line)));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Workspace: an append-only directory store.
//
//   corpus/              ingested corpus
//   runs/<id>/           one directory per finished run, write-once
//   suppression.jsonl    suppression operations log
//   pseudonyms.enc       encrypted pseudonym map
//   audit.jsonl          de-pseudonymisation attempts

class Workspace {
public:
    explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(runs_dir());
    }

    [[nodiscard]] std::filesystem::path const& root() const noexcept { return root_; }
    [[nodiscard]] std::filesystem::path corpus_dir() const { return root_ / "corpus"; }
    [[nodiscard]] std::filesystem::path runs_dir() const { return root_ / "runs"; }
    [[nodiscard]] std::filesystem::path run_dir(std::string const& id) const { return runs_dir() / id; }
    [[nodiscard]] std::filesystem::path suppression_path() const { return root_ / "suppression.jsonl"; }
    [[nodiscard]] std::filesystem::path pseudonym_path() const { return root_ / "pseudonyms.enc"; }
    [[nodiscard]] std::filesystem::path audit_path() const { return root_ / "audit.jsonl"; }

    [[nodiscard]] bool has_corpus() const { return std::filesystem::exists(corpus_dir()); }

    void store_corpus(Corpus const& corpus) const { save_corpus(corpus, corpus_dir()); }

    [[nodiscard]] Corpus corpus() const {
        if (!has_corpus()) {
            throw StoreError("workspace has no corpus: " + root_.string());
        }
        return load_corpus(corpus_dir());
    }

    [[nodiscard]] SuppressionList suppression() const {
        return std::filesystem::exists(suppression_path()) ? SuppressionList::load(suppression_path())
                                                            : SuppressionList{};
    }

    void store_suppression(SuppressionList const& list) const { list.save(suppression_path()); }

    // -- runs ---------------------------------------------------------------

    [[nodiscard]] std::vector<std::string> run_ids() const {
        std::vector<std::string> out;
        for (auto const& entry : std::filesystem::directory_iterator(runs_dir())) {
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
                out.push_back(entry.path().filename().string());
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    [[nodiscard]] bool has_run(std::string const& id) const {
        return std::filesystem::exists(run_dir(id) / "manifest.json");
    }

    /// Next free id of the form run-NNNN.
    [[nodiscard]] std::string next_run_id() const {
        std::size_t n = 1;
        for (auto const& id : run_ids()) {
            if (id.size() == 8 && id.rfind("run-", 0) == 0) {
                n = std::max(n, static_cast<std::size_t>(std::stoul(id.substr(4))) + 1);
            }
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "run-%04zu", n);
        return buf;
    }

    [[nodiscard]] std::optional<std::string> latest_complete_run() const {
        auto ids = run_ids();
        for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
            auto const manifest = nlohmann::json::parse(read_file(run_dir(*it) / "manifest.json"));
            if (manifest.at("status") == "complete") {
                return *it;
            }
        }
        return std::nullopt;
    }

    /// Persists a finished run. The files are written into a scratch
    /// directory that is renamed into place, manifest last, and an existing
    /// run is never overwritten.
    void save_run(RunRecord const& run) const {
        if (run.status == RunStatus::running) {
            throw StoreError("only finished runs are persisted");
        }
        if (run.run_id.empty() || run.run_id.find_first_of("/\\.") != std::string::npos) {
            throw StoreError("bad run id: " + run.run_id);
        }
        auto const final_dir = run_dir(run.run_id);
        if (std::filesystem::exists(final_dir)) {
            throw StoreError("run already exists: " + run.run_id);
        }
        auto const tmp = runs_dir() / (".tmp-" + run.run_id);
        std::filesystem::remove_all(tmp);
        std::filesystem::create_directories(tmp / "histograms");

        auto histograms = nlohmann::json::array();
        for (auto const& h : run.histograms) {
            histograms.push_back(to_json(h));
        }
        auto timings = nlohmann::json::array();
        for (auto const& t : run.timings) {
            timings.push_back(to_json(t));
        }
        std::string sentences;
        for (auto const& r : run.sentence_table) {
            sentences += to_json(r).dump() + "\n";
        }
        std::vector<std::pair<std::string, std::string>> files{
            {"config.json", run.config.dump(2) + "\n"},
            {"timings.json", timings.dump(2) + "\n"},
            {"evidence.jsonl", evidence_jsonl(run.evidence)},
            {"suppressed.jsonl", evidence_jsonl(run.suppressed)},
            {"histograms.json", histograms.dump() + "\n"},
            {"sentence_table.jsonl", sentences},
            {"warnings.json", nlohmann::json(run.warnings).dump(2) + "\n"},
        };
        for (auto const& h : run.histograms) {
            files.emplace_back("histograms/" + h.name + ".csv", report::histogram_csv(&h));
        }
        nlohmann::json checksums = nlohmann::json::object();
        for (auto const& [name, contents] : files) {
            write_file(tmp / name, contents);
            checksums[name] = sha256_hex(contents);
        }
        nlohmann::json manifest{{"run_id", run.run_id},
                                {"status", to_string(run.status)},
                                {"error", run.error},
                                {"created_at", run.created_at},
                                {"corpus_version", run.corpus_version},
                                {"suppression_version", run.suppression_version},
                                {"files", checksums}};
        write_file(tmp / "manifest.json", manifest.dump(2) + "\n");
        std::filesystem::rename(tmp, final_dir);
    }

    /// Loads a run, checking every file against the manifest checksums.
    [[nodiscard]] RunRecord load_run(std::string const& id) const {
        auto const dir = run_dir(id);
        if (!has_run(id)) {
            throw StoreError("no such run: " + id);
        }
        auto const manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
        std::map<std::string, std::string> contents;
        for (auto const& [name, sum] : manifest.at("files").items()) {
            auto data = read_file(dir / name);
            if (sha256_hex(data) != sum.get<std::string>()) {
                throw StoreError("checksum mismatch in run " + id + ": " + name);
            }
            contents[name] = std::move(data);
        }
        auto file = [&](std::string const& name) -> std::string const& {
            auto it = contents.find(name);
            if (it == contents.end()) {
                throw StoreError("run " + id + " lacks " + name);
            }
            return it->second;
        };

        RunRecord run;
        run.run_id = manifest.at("run_id").get<std::string>();
        auto const status = parse_run_status(manifest.at("status").get<std::string>());
        if (!status) {
            throw StoreError("bad status in run " + id);
        }
        run.status = *status;
        run.error = manifest.at("error").get<std::string>();
        run.created_at = manifest.at("created_at").get<std::string>();
        run.corpus_version = manifest.at("corpus_version").get<std::string>();
        run.suppression_version = manifest.at("suppression_version").get<std::uint64_t>();
        run.config = nlohmann::json::parse(file("config.json"));
        for (auto const& t : nlohmann::json::parse(file("timings.json"))) {
            run.timings.push_back(timing_from_json(t));
        }
        run.evidence = evidence_from_jsonl(file("evidence.jsonl"));
        run.suppressed = evidence_from_jsonl(file("suppressed.jsonl"));
        for (auto const& h : nlohmann::json::parse(file("histograms.json"))) {
            run.histograms.push_back(histogram_from_json(h));
        }
        std::istringstream rows(file("sentence_table.jsonl"));
        std::string line;
        while (std::getline(rows, line)) {
            if (!line.empty()) {
                run.sentence_table.push_back(sentence_row_from_json(nlohmann::json::parse(line)));
            }
        }
        run.warnings = nlohmann::json::parse(file("warnings.json")).get<std::vector<std::string>>();
        return run;
    }

    // -- audit --------------------------------------------------------------

    void append_audit(AuditEntry const& e) const {
        std::lock_guard lock(audit_mutex_);
        std::ofstream out(audit_path(), std::ios::app);
        out << nlohmann::json{{"at", e.at}, {"actor", e.actor}, {"uid", e.uid}, {"reason", e.reason},
                              {"outcome", e.outcome}}
                   .dump()
            << "\n";
        out.flush();
        if (!out) {
            throw StoreError("cannot append to audit log");
        }
    }

    [[nodiscard]] std::vector<AuditEntry> audit() const {
        std::lock_guard lock(audit_mutex_);
        std::vector<AuditEntry> out;
        std::ifstream in(audit_path());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            auto const j = nlohmann::json::parse(line);
            out.push_back({j.at("at"), j.at("actor"), j.at("uid"), j.at("reason"), j.at("outcome")});
        }
        return out;
    }

private:
    std::filesystem::path root_;
    mutable std::mutex audit_mutex_;
};

}  // namespace dupforge
