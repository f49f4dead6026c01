#pragma once

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dupforge/config.hpp"
#include "dupforge/corpus.hpp"
#include "dupforge/exclusion.hpp"
#include "dupforge/graph.hpp"
#include "dupforge/pseudonym.hpp"
#include "dupforge/report.hpp"
#include "dupforge/store.hpp"
#include "dupforge/version.hpp"

namespace dupforge {

struct ServiceConfig {
    std::filesystem::path workspace;
    std::string token;           // bearer token required on every endpoint but /health
    std::string pseudonym_key;   // opens pseudonyms.enc; empty disables de-pseudonymisation
    PipelineConfig pipeline;     // defaults for POST /runs
    ExclusionRules rules = ExclusionRules::defaults();
    bool require_corpus = true;  // refuse to start on a workspace without a corpus
};

/// HTTP front end over a Workspace. Reads run concurrently on the server's
/// thread pool; pipeline runs are queued and executed one at a time by a
/// single worker thread.
class Service {
public:
    static constexpr std::size_t default_limit = 100;
    static constexpr std::size_t max_limit = 1000;
    static constexpr char const* corpus_id = "default";

    explicit Service(ServiceConfig config) : config_(std::move(config)), workspace_(config_.workspace) {
        if (config_.token.empty()) {
            throw std::invalid_argument("service needs a bearer token");
        }
        if (workspace_.has_corpus()) {
            corpus_ = std::make_shared<Corpus const>(workspace_.corpus());
        } else if (config_.require_corpus) {
            throw StoreError("no corpus in workspace " + config_.workspace.string() + "; run ingest first");
        }
        if (!config_.pseudonym_key.empty()) {
            pseudonyms_ = std::filesystem::exists(workspace_.pseudonym_path())
                              ? PseudonymMap::load(workspace_.pseudonym_path(), config_.pseudonym_key)
                              : std::make_unique<PseudonymMap>(config_.pseudonym_key);
            pseudonyms_->set_audit_sink([this](AuditEntry const& e) { workspace_.append_audit(e); });
        }
        suppression_ = workspace_.suppression();
        next_run_ = std::stoul(workspace_.next_run_id().substr(4));
        routes();
        worker_ = std::thread([this] { work(); });
    }

    Service(Service const&) = delete;
    Service& operator=(Service const&) = delete;

    ~Service() {
        stop();
        {
            std::lock_guard lock(mutex_);
            shutdown_ = true;
        }
        queue_cv_.notify_all();
        if (worker_.joinable()) {
            worker_.join();
        }
    }

    /// Binds and serves until stop(). Throws on bind failure.
    void listen(std::string const& host, int port) {
        if (!server_.bind_to_port(host, port)) {
            throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
        }
        server_.listen_after_bind();
    }

    /// Binds to a free port and serves on a background thread.
    int start(std::string const& host = "127.0.0.1") {
        int const port = server_.bind_to_any_port(host);
        if (port <= 0) {
            throw std::runtime_error("cannot bind " + host);
        }
        listener_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    void stop() {
        server_.stop();
        if (listener_.joinable()) {
            listener_.join();
        }
    }

    /// Blocks until the run queue is empty and no run is executing.
    void wait_idle() {
        std::unique_lock lock(mutex_);
        idle_cv_.wait(lock, [this] { return queue_.empty() && !running_; });
    }

    [[nodiscard]] Workspace const& workspace() const noexcept { return workspace_; }

private:
    struct Error {
        int status;
        std::string code;
        std::string message;
    };

    struct Pending {
        std::string id;
        PipelineConfig config;
        std::string created_at;
    };

    struct RunView {
        std::shared_ptr<RunRecord const> run;
        std::shared_ptr<EvidenceGraph const> graph;
        std::shared_ptr<std::vector<RankEntry> const> ranking;
    };

    // -- plumbing ------------------------------------------------------------

    static void send_json(httplib::Response& res, int status, nlohmann::json const& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, Error const& e) {
        send_json(res, e.status, {{"code", e.code}, {"message", e.message}});
    }

    [[nodiscard]] bool authorized(httplib::Request const& req) const {
        return req.get_header_value("Authorization") == "Bearer " + config_.token;
    }

    static std::size_t size_param(httplib::Request const& req, char const* name, std::size_t fallback) {
        if (!req.has_param(name)) {
            return fallback;
        }
        auto const v = req.get_param_value(name);
        std::size_t out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            throw Error{400, "bad_request", std::string("bad ") + name + ": " + v};
        }
        return out;
    }

    /// Slice of `items` selected by limit/offset, wrapped with paging info.
    static nlohmann::json page(httplib::Request const& req, nlohmann::json const& items) {
        auto const limit = std::min(size_param(req, "limit", default_limit), max_limit);
        auto const offset = size_param(req, "offset", 0);
        auto out = nlohmann::json::array();
        for (std::size_t i = offset; i < items.size() && i < offset + limit; ++i) {
            out.push_back(items[i]);
        }
        return {{"items", out}, {"total", items.size()}, {"limit", limit}, {"offset", offset}};
    }

    using Handler = std::function<void(httplib::Request const&, httplib::Response&)>;

    /// Wraps a handler with authentication, JSON errors and, for mutating
    /// requests, replay of the stored response for a repeated
    /// Idempotency-Key.
    Handler guarded(Handler h, bool mutating = false, bool open = false) {
        return [this, h = std::move(h), mutating, open](httplib::Request const& req, httplib::Response& res) {
            if (!open && !authorized(req)) {
                send_error(res, {401, "unauthorized", "missing or wrong bearer token"});
                return;
            }
            std::string idem;
            if (mutating && req.has_header("Idempotency-Key")) {
                idem = req.method + " " + req.path + " " + req.get_header_value("Idempotency-Key");
                std::unique_lock lock(idem_mutex_);
                idem_cv_.wait(lock, [&] { return !idem_busy_.contains(idem); });
                if (auto it = idem_.find(idem); it != idem_.end()) {
                    res.status = it->second.first;
                    res.set_content(it->second.second, "application/json");
                    return;
                }
                idem_busy_.insert(idem);
            }
            try {
                h(req, res);
            } catch (Error const& e) {
                send_error(res, e);
            } catch (ConfigError const& e) {
                send_error(res, {400, "bad_config", e.what()});
            } catch (nlohmann::json::exception const& e) {
                send_error(res, {400, "bad_json", e.what()});
            } catch (std::invalid_argument const& e) {
                send_error(res, {400, "bad_request", e.what()});
            } catch (std::exception const& e) {
                send_error(res, {500, "internal", e.what()});
            }
            if (!idem.empty()) {
                std::lock_guard lock(idem_mutex_);
                if (res.status < 500) {
                    idem_[idem] = {res.status, res.body};
                }
                idem_busy_.erase(idem);
                idem_cv_.notify_all();
            }
        };
    }

    // -- state ---------------------------------------------------------------

    [[nodiscard]] std::shared_ptr<Corpus const> corpus() const {
        std::lock_guard lock(mutex_);
        if (!corpus_) {
            throw Error{404, "no_corpus", "no corpus has been ingested"};
        }
        return corpus_;
    }

    RunView view(std::string const& id, bool with_graph = false) {
        std::shared_ptr<RunRecord const> run;
        {
            std::lock_guard lock(mutex_);
            if (auto it = views_.find(id); it != views_.end() && (!with_graph || it->second.graph)) {
                return it->second;
            }
            if (is_pending(id)) {
                throw Error{409, "run_not_finished", "run " + id + " has not finished"};
            }
            if (auto it = views_.find(id); it != views_.end()) {
                run = it->second.run;
            }
        }
        if (!run) {
            if (!workspace_.has_run(id)) {
                throw Error{404, "not_found", "no run " + id};
            }
            run = std::make_shared<RunRecord const>(workspace_.load_run(id));
        }
        RunView v{run, nullptr, nullptr};
        if (with_graph) {
            if (run->status != RunStatus::complete) {
                throw Error{409, "run_failed", "run " + id + " did not complete"};
            }
            auto const c = corpus();
            if (run->corpus_version != corpus_version(*c)) {
                throw Error{409, "corpus_changed", "run " + id + " was made on another corpus"};
            }
            auto graph = std::make_shared<EvidenceGraph const>(build_graph(run->evidence, *c, SuppressionList{}));
            auto opts = config_.pipeline.pagerank;
            if (run->config.contains("weighted")) {
                opts.weighted = run->config.at("weighted").get<bool>();
            }
            v.ranking = std::make_shared<std::vector<RankEntry> const>(pagerank(*graph, opts));
            v.graph = std::move(graph);
        }
        std::lock_guard lock(mutex_);
        return views_[id] = v;
    }

    [[nodiscard]] bool is_pending(std::string const& id) const {
        return running_id_ == id ||
               std::any_of(queue_.begin(), queue_.end(), [&](Pending const& p) { return p.id == id; });
    }

    // -- run worker ----------------------------------------------------------

    void work() {
        while (true) {
            Pending job;
            {
                std::unique_lock lock(mutex_);
                queue_cv_.wait(lock, [this] { return shutdown_ || !queue_.empty(); });
                if (shutdown_) {
                    return;
                }
                job = std::move(queue_.front());
                queue_.pop_front();
                running_ = true;
                running_id_ = job.id;
            }
            RunRecord run;
            try {
                auto const c = corpus();
                SuppressionList suppression;
                {
                    std::lock_guard lock(suppression_mutex_);
                    suppression = suppression_;
                }
                run = run_all(*c, job.config.search, suppression, config_.rules, job.id);
                run.config = to_json(job.config);
            } catch (std::exception const& e) {
                run.run_id = job.id;
                run.status = RunStatus::failed;
                run.error = e.what();
            } catch (Error const& e) {
                run.run_id = job.id;
                run.status = RunStatus::failed;
                run.error = e.message;
            }
            run.created_at = job.created_at;
            try {
                workspace_.save_run(run);
            } catch (std::exception const& e) {
                run.status = RunStatus::failed;
                run.error = std::string("could not persist run: ") + e.what();
            }
            {
                std::lock_guard lock(mutex_);
                views_[job.id] = RunView{std::make_shared<RunRecord const>(std::move(run)), nullptr, nullptr};
                running_ = false;
                running_id_.clear();
            }
            idle_cv_.notify_all();
        }
    }

    // -- handlers ------------------------------------------------------------

    static std::string config_value(nlohmann::json const& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_array()) {
            std::string out;
            for (auto const& x : v) {
                out += (out.empty() ? "" : ",") + config_value(x);
            }
            return out;
        }
        return v.dump();
    }

    void post_run(httplib::Request const& req, httplib::Response& res) {
        static_cast<void>(corpus());
        auto config = config_.pipeline;
        if (!req.body.empty()) {
            auto const body = nlohmann::json::parse(req.body);
            if (!body.is_object()) {
                throw Error{400, "bad_request", "run body must be a JSON object"};
            }
            for (auto const& [key, value] : body.items()) {
                if (key == "curated_sentences") {
                    config.search.curated_sentences = value.get<std::vector<std::string>>();
                } else {
                    set_config_value(config, key, config_value(value));
                }
            }
            config.validate();
        }
        std::lock_guard lock(mutex_);
        char id[16];
        std::snprintf(id, sizeof id, "run-%04zu", next_run_++);
        queue_.push_back({id, std::move(config), utc_now_iso()});
        auto const position = queue_.size() - 1 + (running_ ? 1 : 0);
        queue_cv_.notify_one();
        send_json(res, 202, {{"run_id", id}, {"status", "queued"}, {"queue_position", position}});
    }

    nlohmann::json run_status(std::string const& id) {
        {
            std::lock_guard lock(mutex_);
            if (running_id_ == id) {
                return {{"run_id", id}, {"status", "running"}};
            }
            for (std::size_t i = 0; i < queue_.size(); ++i) {
                if (queue_[i].id == id) {
                    return {{"run_id", id}, {"status", "queued"}, {"queue_position", i + (running_ ? 1 : 0)}};
                }
            }
        }
        return run_summary_json(*view(id).run);
    }

    nlohmann::json pair_detail(std::string const& id, std::string a, std::string b) {
        if (b < a) {
            std::swap(a, b);
        }
        auto const v = view(id);
        auto const c = corpus();
        std::vector<PairEvidence const*> found;
        for (auto const& e : v.run->evidence) {
            if (e.account_a == a && e.account_b == b) {
                found.push_back(&e);
            }
        }
        if (found.empty()) {
            bool const suppressed = std::any_of(v.run->suppressed.begin(), v.run->suppressed.end(),
                                                [&](auto const& e) { return e.account_a == a && e.account_b == b; });
            if (suppressed) {
                throw Error{404, "suppressed", "pair " + a + " / " + b + " is suppressed in run " + id};
            }
            throw Error{404, "not_found", "no evidence for pair " + a + " / " + b + " in run " + id};
        }
        std::set<std::string> ids;
        auto evidence = nlohmann::json::array();
        for (auto const* e : found) {
            ids.insert(e->comment_ids.begin(), e->comment_ids.end());
            evidence.push_back(to_json(*e));
        }
        std::map<std::string, std::set<std::string>> sentences_of;  // account -> sentences over the pair's comments
        std::vector<Comment const*> comments;
        for (auto const& cid : ids) {
            auto const pos = c->find(cid);
            if (!pos) {
                continue;
            }
            auto const& cm = (*c)[*pos];
            comments.push_back(&cm);
            sentences_of[cm.referee_uid].insert(cm.sentences.begin(), cm.sentences.end());
        }
        auto out_comments = nlohmann::json::array();
        for (auto const* cm : comments) {
            auto const& other = sentences_of[cm->referee_uid == a ? b : a];
            auto sentences = nlohmann::json::array();
            for (auto const& s : cm->sentences) {
                sentences.push_back({{"text", s}, {"shared", other.contains(s)}});
            }
            nlohmann::json article{{"article_id", cm->article_id}};
            if (auto it = c->authorship().find(cm->article_id); it != c->authorship().end()) {
                article["lead_author"] = it->second.lead;
                article["co_authors"] = it->second.co_authors;
            }
            out_comments.push_back({{"comment_id", cm->comment_id},
                                    {"referee", cm->referee_uid},
                                    {"journal_id", cm->journal_id},
                                    {"submitted_at", cm->submitted_at.str()},
                                    {"article", article},
                                    {"sentences", sentences}});
        }
        return {{"run_id", id}, {"account_a", a}, {"account_b", b}, {"evidence", evidence}, {"comments", out_comments}};
    }

    void routes() {
        server_.Get("/health", guarded(
                                   [](httplib::Request const&, httplib::Response& res) {
                                       send_json(res, 200, {{"status", "ok"}, {"version", version}});
                                   },
                                   false, true));

        server_.Post("/corpora", guarded(
                                     [this](httplib::Request const& req, httplib::Response& res) {
                                         IngestConfig ic;
                                         if (req.has_param("blocklist")) {
                                             std::stringstream ss(req.get_param_value("blocklist"));
                                             std::string j;
                                             while (std::getline(ss, j, ',')) {
                                                 ic.journal_blocklist.insert(j);
                                             }
                                         }
                                         ic.min_length = size_param(req, "min_length", ic.min_length);
                                         std::istringstream in(req.body);
                                         auto const rows = req.get_header_value("Content-Type") == "text/csv"
                                                               ? read_csv(in)
                                                               : read_jsonl(in);
                                         std::lock_guard ingest_lock(ingest_mutex_);
                                         ic.pseudonyms = pseudonyms_.get();
                                         auto result = ingest(rows, ic);
                                         workspace_.store_corpus(result.corpus);
                                         if (pseudonyms_) {
                                             pseudonyms_->save(workspace_.pseudonym_path());
                                         }
                                         auto excluded = nlohmann::json::object();
                                         for (auto r : {ExclusionReason::malformed, ExclusionReason::blocklisted_journal,
                                                        ExclusionReason::later_round,
                                                        ExclusionReason::reject_recommendation,
                                                        ExclusionReason::too_short}) {
                                             excluded[std::string(to_string(r))] = result.count(r);
                                         }
                                         auto const stats = to_json(result.corpus.stats());
                                         {
                                             std::lock_guard lock(mutex_);
                                             corpus_ = std::make_shared<Corpus const>(std::move(result.corpus));
                                         }
                                         send_json(res, 201,
                                                   {{"corpus_id", corpus_id}, {"stats", stats}, {"excluded", excluded}});
                                     },
                                     true));

        server_.Get(R"(/corpora/([^/]+)/stats)", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        if (req.matches[1] != corpus_id) {
                            throw Error{404, "not_found", "no corpus " + std::string(req.matches[1])};
                        }
                        auto const c = corpus();
                        auto body = to_json(c->stats());
                        body["corpus_id"] = corpus_id;
                        body["version"] = corpus_version(*c);
                        send_json(res, 200, body);
                    }));

        server_.Post("/runs", guarded([this](httplib::Request const& req, httplib::Response& res) { post_run(req, res); }, true));

        server_.Get("/runs", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        std::set<std::string> ids;
                        for (auto const& id : workspace_.run_ids()) {
                            ids.insert(id);
                        }
                        {
                            std::lock_guard lock(mutex_);
                            for (auto const& p : queue_) {
                                ids.insert(p.id);
                            }
                            if (!running_id_.empty()) {
                                ids.insert(running_id_);
                            }
                        }
                        auto items = nlohmann::json::array();
                        for (auto const& id : ids) {
                            auto s = run_status(id);
                            items.push_back({{"run_id", id}, {"status", s.at("status")}});
                        }
                        send_json(res, 200, page(req, items));
                    }));

        server_.Get(R"(/runs/([^/]+))", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        send_json(res, 200, run_status(req.matches[1]));
                    }));

        server_.Get(R"(/runs/([^/]+)/evidence)", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto const v = view(req.matches[1]);
                        std::optional<Method> method;
                        if (req.has_param("method")) {
                            method = parse_method(req.get_param_value("method"));
                            if (!method) {
                                throw Error{400, "bad_request", "unknown method " + req.get_param_value("method")};
                            }
                        }
                        double min_score = -std::numeric_limits<double>::infinity();
                        if (req.has_param("min_score")) {
                            min_score = std::stod(req.get_param_value("min_score"));
                        }
                        auto items = nlohmann::json::array();
                        for (auto const& e : v.run->evidence) {
                            if ((!method || e.method == *method) && e.score.value >= min_score) {
                                items.push_back(to_json(e));
                            }
                        }
                        send_json(res, 200, page(req, items));
                    }));

        server_.Get(R"(/runs/([^/]+)/graph)", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto const v = view(req.matches[1], true);
                        auto body = graph_to_json(*v.graph, *v.ranking);
                        body["run_id"] = std::string(req.matches[1]);
                        send_json(res, 200, body);
                    }));

        server_.Get(R"(/runs/([^/]+)/ranking)", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto const v = view(req.matches[1], true);
                        if (req.get_param_value("format") == "csv") {
                            res.set_content(ranking_to_csv(*v.ranking), "text/csv");
                            return;
                        }
                        auto items = nlohmann::json::array();
                        for (auto const& r : *v.ranking) {
                            items.push_back({{"uid", r.uid}, {"pagerank", r.pagerank}, {"rank", r.rank}});
                        }
                        send_json(res, 200, page(req, items));
                    }));

        server_.Get(R"(/runs/([^/]+)/reports/([^/]+))", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto const v = view(req.matches[1], true);
                        auto const name = std::string(req.matches[2]);
                        report::ReportOptions opt{config_.pipeline.cluster_min, true};
                        if (v.run->config.contains("cluster_min")) {
                            opt.cluster_min = v.run->config.at("cluster_min").get<std::size_t>();
                        }
                        for (auto const& [file, contents] : report::render_reports(*v.run, *corpus(), opt)) {
                            if (file == name) {
                                res.set_content(contents, name.ends_with(".svg") ? "image/svg+xml" : "text/csv");
                                return;
                            }
                        }
                        throw Error{404, "not_found", "no report " + name};
                    }));

        server_.Get(R"(/runs/([^/]+)/pairs/([^/]+)/([^/]+))", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        send_json(res, 200, pair_detail(req.matches[1], req.matches[2], req.matches[3]));
                    }));

        server_.Get("/suppress", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto items = nlohmann::json::array();
                        std::lock_guard lock(suppression_mutex_);
                        for (auto const& e : suppression_.active()) {
                            items.push_back(SuppressionList::to_json(e));
                        }
                        auto body = page(req, items);
                        body["version"] = suppression_.version();
                        send_json(res, 200, body);
                    }));

        server_.Post("/suppress", guarded(
                                      [this](httplib::Request const& req, httplib::Response& res) {
                                          auto const body = nlohmann::json::parse(req.body);
                                          std::string a;
                                          std::string b;
                                          auto const& entity = body.at("entity");
                                          if (entity.is_string()) {
                                              a = entity.get<std::string>();
                                          } else {
                                              a = entity.at("account_a").get<std::string>();
                                              b = entity.at("account_b").get<std::string>();
                                          }
                                          auto const cat = parse_suppression_category(body.at("category").get<std::string>());
                                          if (!cat) {
                                              throw Error{400, "bad_request", "unknown category"};
                                          }
                                          std::lock_guard lock(suppression_mutex_);
                                          auto next = suppression_;
                                          auto const entry = next.add(a, *cat, body.at("reason").get<std::string>(), b);
                                          workspace_.store_suppression(next);
                                          suppression_ = std::move(next);
                                          auto out = SuppressionList::to_json(entry);
                                          out["version"] = suppression_.version();
                                          send_json(res, 201, out);
                                      },
                                      true));

        server_.Delete(R"(/suppress/([0-9]+))", guarded(
                                                    [this](httplib::Request const& req, httplib::Response& res) {
                                                        auto const id = std::stoull(std::string(req.matches[1]));
                                                        std::lock_guard lock(suppression_mutex_);
                                                        auto next = suppression_;
                                                        if (!next.revoke(id)) {
                                                            throw Error{404, "not_found",
                                                                        "no active suppression " + std::to_string(id)};
                                                        }
                                                        workspace_.store_suppression(next);
                                                        suppression_ = std::move(next);
                                                        send_json(res, 200,
                                                                  {{"revoked", id}, {"version", suppression_.version()}});
                                                    },
                                                    true));

        server_.Post("/unpseudonymise", guarded(
                                            [this](httplib::Request const& req, httplib::Response& res) {
                                                if (!pseudonyms_) {
                                                    throw Error{404, "not_found", "no pseudonym map is loaded"};
                                                }
                                                auto const body = nlohmann::json::parse(req.body);
                                                auto const uid = body.at("uid").get<std::string>();
                                                auto const r = pseudonyms_->reverse(
                                                    uid, body.value("key", std::string{}),
                                                    body.value("reason", std::string{}),
                                                    body.value("actor", std::string("api")));
                                                switch (r.status) {
                                                case ReverseStatus::granted:
                                                    send_json(res, 200, {{"uid", uid}, {"identity", r.identity}});
                                                    return;
                                                case ReverseStatus::denied:
                                                    throw Error{403, "denied", "wrong de-pseudonymisation key"};
                                                case ReverseStatus::missing_reason:
                                                    throw Error{400, "missing_reason", "a reason is required"};
                                                case ReverseStatus::not_found:
                                                    throw Error{404, "not_found", "unknown uid " + uid};
                                                }
                                            },
                                            false));

        server_.Get("/audit", guarded([this](httplib::Request const& req, httplib::Response& res) {
                        auto items = nlohmann::json::array();
                        for (auto const& e : workspace_.audit()) {
                            items.push_back({{"at", e.at},
                                             {"actor", e.actor},
                                             {"uid", e.uid},
                                             {"reason", e.reason},
                                             {"outcome", e.outcome}});
                        }
                        send_json(res, 200, page(req, items));
                    }));

        server_.set_error_handler([](httplib::Request const&, httplib::Response& res) {
            if (res.body.empty()) {
                send_error(res, {res.status, res.status == 404 ? "not_found" : "error", "no such endpoint"});
            }
        });
        // SO_REUSEPORT (the library default) would let a second instance share the port.
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
    }

    ServiceConfig config_;
    Workspace workspace_;
    httplib::Server server_;
    std::thread listener_;
    std::thread worker_;

    mutable std::mutex mutex_;  // corpus_, views_, queue_, running state
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::shared_ptr<Corpus const> corpus_;
    std::map<std::string, RunView> views_;
    std::deque<Pending> queue_;
    bool running_ = false;
    std::string running_id_;
    bool shutdown_ = false;
    std::size_t next_run_ = 1;

    std::mutex ingest_mutex_;
    std::mutex suppression_mutex_;
    SuppressionList suppression_;
    std::unique_ptr<PseudonymMap> pseudonyms_;

    std::mutex idem_mutex_;
    std::condition_variable idem_cv_;
    std::set<std::string> idem_busy_;
    std::map<std::string, std::pair<int, std::string>> idem_;
};

}  // namespace dupforge
