#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dupforge/config.hpp"
#include "dupforge/corpus.hpp"
#include "dupforge/graph.hpp"
#include "dupforge/pseudonym.hpp"
#include "dupforge/report.hpp"
#include "dupforge/search.hpp"
#include "dupforge/service.hpp"
#include "dupforge/store.hpp"
#include "dupforge/synthetic.hpp"
#include "dupforge/text_index.hpp"
#include "dupforge/version.hpp"

namespace fs = std::filesystem;
using namespace dupforge;

namespace {

/// Bad input or state the user can fix; exits 1.
class UserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string workspace = "dupforge-work";
    std::string config;
};

std::string secret(std::string const& file, char const* env, char const* what) {
    if (!file.empty()) {
        auto text = read_file(file);
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
            text.pop_back();
        }
        return text;
    }
    if (auto const* v = std::getenv(env)) {
        return v;
    }
    throw UserError(std::string("no ") + what + "; set " + env + " or pass a file");
}

PipelineConfig pipeline_config(Common const& common) {
    return common.config.empty() ? PipelineConfig{} : load_config(common.config);
}

void wrote(fs::path const& path) { std::cout << "wrote " << path.string() << "\n"; }

std::string resolve_run(Workspace const& ws, std::string const& requested) {
    if (!requested.empty()) {
        if (!ws.has_run(requested)) {
            throw UserError("no run " + requested + " in " + ws.root().string());
        }
        return requested;
    }
    auto latest = ws.latest_complete_run();
    if (!latest) {
        throw UserError("no completed run in " + ws.root().string() + "; run `dupforge run` first");
    }
    return *latest;
}

RunRecord load_complete_run(Workspace const& ws, std::string const& requested) {
    auto run = ws.load_run(resolve_run(ws, requested));
    if (run.status != RunStatus::complete) {
        throw UserError("run " + run.run_id + " did not complete");
    }
    return run;
}

// -- subcommands -------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::vector<std::string> blocklist;
    std::size_t min_length = 150;
    std::string key_file;
};

int cmd_ingest(Common const& common, IngestArgs const& a) {
    Workspace ws(common.workspace);
    IngestConfig ic;
    ic.journal_blocklist.insert(a.blocklist.begin(), a.blocklist.end());
    ic.min_length = a.min_length;
    std::unique_ptr<PseudonymMap> map;
    if (!a.key_file.empty() || std::getenv("DUPFORGE_PSEUDONYM_KEY") != nullptr) {
        auto key = secret(a.key_file, "DUPFORGE_PSEUDONYM_KEY", "pseudonym key");
        map = fs::exists(ws.pseudonym_path()) ? PseudonymMap::load(ws.pseudonym_path(), key)
                                              : std::make_unique<PseudonymMap>(key);
        ic.pseudonyms = map.get();
    }
    auto result = ingest_file(a.input, ic);
    ws.store_corpus(result.corpus);
    wrote(ws.corpus_dir());
    if (map) {
        map->save(ws.pseudonym_path());
        wrote(ws.pseudonym_path());
    }
    auto const excluded_path = ws.root() / "excluded.csv";
    std::string csv = "line,comment_id,reason,detail\n";
    for (auto const& e : result.excluded) {
        csv += std::to_string(e.line) + "," + report::csv_field(e.comment_id) + "," +
               std::string(to_string(e.reason)) + "," + report::csv_field(e.detail) + "\n";
    }
    write_file(excluded_path, csv);
    wrote(excluded_path);
    auto const s = result.corpus.stats();
    std::cout << "comments " << s.comments << " accounts " << s.accounts << " articles " << s.articles
              << " excluded " << result.excluded.size() << "\n";
    return 0;
}

struct SynthArgs {
    SyntheticSpec spec;
    bool suppress_planted = false;
};

int cmd_synth(Common const& common, SynthArgs const& a) {
    Workspace ws(common.workspace);
    SyntheticCorpus synth;
    try {
        synth = generate_synthetic(a.spec);
    } catch (std::invalid_argument const& e) {
        throw UserError(e.what());
    }
    ws.store_corpus(synth.corpus);
    wrote(ws.corpus_dir());
    fs::create_directories(ws.root() / "synth");
    auto const rows = ws.root() / "synth" / "rows.jsonl";
    std::ostringstream out;
    write_jsonl(synth.rows, out);
    write_file(rows, out.str());
    wrote(rows);
    auto const truth = ws.root() / "synth" / "truth.json";
    auto tj = to_json(synth.truth);
    tj["spec"] = to_json(a.spec);
    write_file(truth, tj.dump(2) + "\n");
    wrote(truth);
    auto const curated = ws.root() / "synth" / "curated.txt";
    std::string lines;
    for (auto const& s : synth.truth.typo_sentences) {
        lines += s + "\n";
    }
    write_file(curated, lines);
    wrote(curated);
    if (a.suppress_planted) {
        ws.store_suppression(synth.truth.suppression());
        wrote(ws.suppression_path());
    }
    auto const s = synth.corpus.stats();
    std::cout << "comments " << s.comments << " accounts " << s.accounts << " mill " << synth.truth.mill_accounts.size()
              << "\n";
    return 0;
}

struct RunArgs {
    std::vector<int> searches;
    std::optional<std::uint64_t> seed;
    std::string curated;
};

int cmd_run(Common const& common, RunArgs const& a) {
    Workspace ws(common.workspace);
    auto config = pipeline_config(common);
    if (!a.searches.empty()) {
        config.search.searches.clear();
        for (int n : a.searches) {
            auto const m = parse_method(std::to_string(n));
            if (!m) {
                throw UserError("no search " + std::to_string(n) + "; expected 1 to 6");
            }
            config.search.searches.insert(*m);
        }
    }
    if (a.seed) {
        config.search.seed = *a.seed;
    }
    if (!a.curated.empty()) {
        std::ifstream in(a.curated);
        if (!in) {
            throw UserError("cannot read " + a.curated);
        }
        config.search.curated_sentences.clear();
        for (std::string line; std::getline(in, line);) {
            if (!detail::trim(line).empty()) {
                config.search.curated_sentences.emplace_back(detail::trim(line));
            }
        }
    }
    config.validate();
    auto const corpus = ws.corpus();
    auto run = run_all(corpus, config.search, ws.suppression(), ExclusionRules::defaults(), ws.next_run_id());
    run.config = to_json(config);
    ws.save_run(run);
    wrote(ws.run_dir(run.run_id));
    for (auto const& t : run.timings) {
        std::cout << to_string(t.method) << " evidence " << t.evidence_count << " accounts " << t.accounts_found << "\n";
    }
    for (auto const& w : run.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    if (run.status != RunStatus::complete) {
        std::cerr << "run " << run.run_id << " failed: " << run.error << "\n";
        return 2;
    }
    std::cout << "run " << run.run_id << " complete, " << run.evidence.size() << " evidence, "
              << run.suppressed.size() << " suppressed\n";
    return 0;
}

struct ReportArgs {
    std::string run;
    std::string out;
    bool svg = false;
};

int cmd_report(Common const& common, ReportArgs const& a) {
    Workspace ws(common.workspace);
    auto const config = pipeline_config(common);
    auto const run = load_complete_run(ws, a.run);
    auto const corpus = ws.corpus();
    fs::path const dir = a.out.empty() ? ws.root() / "reports" / run.run_id : fs::path(a.out);
    for (auto const& path : report::write_reports(dir, run, corpus, {config.cluster_min, a.svg})) {
        wrote(path);
    }
    return 0;
}

struct GraphArgs {
    std::string run;
    std::string out;
    std::string format = "json";
};

int cmd_graph_export(Common const& common, GraphArgs const& a) {
    Workspace ws(common.workspace);
    auto const config = pipeline_config(common);
    auto const run = load_complete_run(ws, a.run);
    auto const graph = build_graph(run.evidence, ws.corpus(), SuppressionList{});
    fs::path out = a.out.empty() ? ws.run_dir(run.run_id) / ("graph." + a.format) : fs::path(a.out);
    if (a.format == "json") {
        write_file(out, graph_to_json(graph, pagerank(graph, config.pagerank)).dump(2) + "\n");
    } else {
        write_file(out, graph_to_graphml(graph));
    }
    wrote(out);
    return 0;
}

struct RankArgs {
    std::string run;
    std::string out;
    std::size_t top = 10;
};

int cmd_rank(Common const& common, RankArgs const& a) {
    Workspace ws(common.workspace);
    auto const config = pipeline_config(common);
    auto const run = load_complete_run(ws, a.run);
    auto const graph = build_graph(run.evidence, ws.corpus(), SuppressionList{});
    auto const ranking = pagerank(graph, config.pagerank);
    fs::path out = a.out.empty() ? ws.run_dir(run.run_id) / "ranking.csv" : fs::path(a.out);
    write_file(out, ranking_to_csv(ranking));
    for (std::size_t i = 0; i < ranking.size() && i < a.top; ++i) {
        std::cout << i + 1 << " " << ranking[i].uid << " " << report::fixed(ranking[i].pagerank, 6) << "\n";
    }
    wrote(out);
    return 0;
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token_file;
    std::string key_file;
    bool allow_empty = false;
};

int cmd_serve(Common const& common, ServeArgs const& a) {
    ServiceConfig sc;
    sc.workspace = common.workspace;
    sc.token = secret(a.token_file, "DUPFORGE_TOKEN", "bearer token");
    if (!a.key_file.empty() || std::getenv("DUPFORGE_PSEUDONYM_KEY") != nullptr) {
        sc.pseudonym_key = secret(a.key_file, "DUPFORGE_PSEUDONYM_KEY", "pseudonym key");
    }
    sc.pipeline = pipeline_config(common);
    sc.require_corpus = !a.allow_empty;
    Service service(std::move(sc));
    std::cout << "listening on http://" << a.host << ":" << a.port << std::endl;
    service.listen(a.host, a.port);
    return 0;
}

struct SuppressArgs {
    std::string account;
    std::string pair_with;
    std::string category = "other";
    std::string reason;
    std::uint64_t id = 0;
};

int cmd_suppress_add(Common const& common, SuppressArgs const& a) {
    Workspace ws(common.workspace);
    auto const category = parse_suppression_category(a.category);
    if (!category) {
        throw UserError("unknown category " + a.category);
    }
    auto list = ws.suppression();
    auto const e = list.add(a.account, *category, a.reason, a.pair_with);
    ws.store_suppression(list);
    std::cout << "added " << e.id << " at version " << list.version() << "\n";
    wrote(ws.suppression_path());
    return 0;
}

int cmd_suppress_revoke(Common const& common, SuppressArgs const& a) {
    Workspace ws(common.workspace);
    auto list = ws.suppression();
    if (!list.revoke(a.id)) {
        throw UserError("no active suppression " + std::to_string(a.id));
    }
    ws.store_suppression(list);
    std::cout << "revoked " << a.id << " at version " << list.version() << "\n";
    wrote(ws.suppression_path());
    return 0;
}

int cmd_suppress_list(Common const& common) {
    Workspace ws(common.workspace);
    auto const list = ws.suppression();
    std::cout << "id,account,account_b,category,reason\n";
    for (auto const& e : list.active()) {
        std::cout << e.id << "," << e.account << "," << e.account_b << "," << to_string(e.category) << ","
                  << report::csv_field(e.reason) << "\n";
    }
    return 0;
}

struct UnpseudonymiseArgs {
    std::string uid;
    std::string reason;
    std::string actor = "cli";
    std::string key_file;
};

int cmd_unpseudonymise(Common const& common, UnpseudonymiseArgs const& a) {
    Workspace ws(common.workspace);
    if (!fs::exists(ws.pseudonym_path())) {
        throw UserError("no pseudonym map in " + ws.root().string());
    }
    auto const key = secret(a.key_file, "DUPFORGE_PSEUDONYM_KEY", "pseudonym key");
    std::unique_ptr<PseudonymMap> map;
    try {
        map = PseudonymMap::load(ws.pseudonym_path(), key);
    } catch (std::runtime_error const&) {
        ws.append_audit({utc_now_iso(), a.actor, a.uid, a.reason, "denied"});
        throw UserError("access denied");
    }
    map->set_audit_sink([&ws](AuditEntry const& e) { ws.append_audit(e); });
    auto const r = map->reverse(a.uid, key, a.reason, a.actor);
    switch (r.status) {
    case ReverseStatus::granted: std::cout << r.identity << "\n"; return 0;
    case ReverseStatus::missing_reason: throw UserError("a reason is required");
    case ReverseStatus::not_found: throw UserError("unknown uid " + a.uid);
    case ReverseStatus::denied: break;
    }
    throw UserError("access denied");
}

struct IndexArgs {
    std::string term;
    std::string granularity = "comment";
    std::string index;
    std::string save;
};

int cmd_index_dump(Common const& common, IndexArgs const& a) {
    std::optional<InvertedIndex> index;
    if (!a.index.empty()) {
        index = InvertedIndex::load(a.index);
    } else {
        Workspace ws(common.workspace);
        auto const corpus = ws.corpus();
        index = a.granularity == "sentence" ? build_sentence_index(corpus) : build_comment_index(corpus);
    }
    if (!a.save.empty()) {
        index->save(a.save);
        wrote(a.save);
    }
    auto const terms = analyze(a.term);
    if (terms.size() != 1) {
        throw UserError("expected a single term, got " + std::to_string(terms.size()) + " after analysis");
    }
    auto const& postings = index->postings(terms.front());
    std::cout << "term " << terms.front() << " df " << postings.size() << " docs " << index->doc_count() << "\n";
    bool const sentences = index->granularity() == Granularity::sentence;
    std::cout << (sentences ? "doc,id,tf,length,comment_id,referee_uid,ordinal\n" : "doc,id,tf,length\n");
    for (auto const& p : postings) {
        std::cout << p.doc << "," << index->id(p.doc) << "," << p.tf << "," << index->doc_length(p.doc);
        if (sentences) {
            auto const& s = index->sentence(p.doc);
            std::cout << "," << s.comment_id << "," << s.referee_uid << "," << s.ordinal;
        }
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Duplication forensics for peer-review comments"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    Common common;
    app.add_option("-w,--workspace", common.workspace, "Workspace directory")->capture_default_str();
    app.add_option("-c,--config", common.config, "Pipeline config file (key = value)")->check(CLI::ExistingFile);

    std::function<int()> action;

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Normalize, filter and pseudonymise a JSONL or CSV export");
    ingest->add_option("input", ingest_args.input, "Input file (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--blocklist", ingest_args.blocklist, "Journals to drop")->delimiter(',');
    ingest->add_option("--min-length", ingest_args.min_length, "Minimum comment length in code points")
        ->capture_default_str();
    ingest->add_option("--key-file", ingest_args.key_file, "Pseudonym key file (else $DUPFORGE_PSEUDONYM_KEY)");
    ingest->callback([&] { action = [&] { return cmd_ingest(common, ingest_args); }; });

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with a planted mill");
    synth->add_option("--seed", synth_args.spec.seed, "Generator seed")->capture_default_str();
    synth->add_option("--mill", synth_args.spec.mill_accounts, "Mill accounts")->capture_default_str();
    synth->add_option("--innocent", synth_args.spec.innocent_accounts, "Innocent accounts")->capture_default_str();
    synth->add_option("--comments-per-account", synth_args.spec.comments_per_account,
                      "Mean comments per innocent account")
        ->capture_default_str();
    synth->add_option("--mutation", synth_args.spec.mutation_rate, "Per-sentence mutation rate of mill templates")
        ->capture_default_str();
    synth->add_option("--peak-month", synth_args.spec.peak_month, "Month of peak mill activity")->capture_default_str();
    synth->add_flag("--suppress-planted", synth_args.suppress_planted,
                    "Store suppression entries for the planted innocent duplication");
    synth->callback([&] { action = [&] { return cmd_synth(common, synth_args); }; });

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run the searches on the workspace corpus");
    run->add_option("--search", run_args.searches, "Run only these searches (1-6); repeatable");
    run->add_option("--seed", run_args.seed, "Override the MinHash seed");
    run->add_option("--curated", run_args.curated, "Curated sentences for search 5, one per line")
        ->check(CLI::ExistingFile);
    run->callback([&] { action = [&] { return cmd_run(common, run_args); }; });

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Write summary, overlap, timing, histogram and series reports");
    report->add_option("--run", report_args.run, "Run id (default: latest completed)");
    report->add_option("-o,--out", report_args.out, "Output directory (default: <workspace>/reports/<run>)");
    report->add_flag("--svg", report_args.svg, "Also write SVG charts");
    report->callback([&] { action = [&] { return cmd_report(common, report_args); }; });

    GraphArgs graph_args;
    auto* graph = app.add_subcommand("graph-export", "Export the evidence graph");
    graph->add_option("--run", graph_args.run, "Run id (default: latest completed)");
    graph->add_option("-o,--out", graph_args.out, "Output file (default: <run dir>/graph.<format>)");
    graph->add_option("--format", graph_args.format, "json or graphml")
        ->check(CLI::IsMember({"json", "graphml"}))
        ->capture_default_str();
    graph->callback([&] { action = [&] { return cmd_graph_export(common, graph_args); }; });

    RankArgs rank_args;
    auto* rank = app.add_subcommand("rank", "PageRank over the duplication graph");
    rank->add_option("--run", rank_args.run, "Run id (default: latest completed)");
    rank->add_option("-o,--out", rank_args.out, "Output CSV (default: <run dir>/ranking.csv)");
    rank->add_option("--top", rank_args.top, "Rows to print")->capture_default_str();
    rank->callback([&] { action = [&] { return cmd_rank(common, rank_args); }; });

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--host", serve_args.host, "Bind address")->capture_default_str();
    serve->add_option("--port", serve_args.port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));
    serve->add_option("--token-file", serve_args.token_file, "Bearer token file (else $DUPFORGE_TOKEN)");
    serve->add_option("--key-file", serve_args.key_file, "Pseudonym key file (else $DUPFORGE_PSEUDONYM_KEY)");
    serve->add_flag("--allow-empty", serve_args.allow_empty, "Start without a corpus");
    serve->callback([&] { action = [&] { return cmd_serve(common, serve_args); }; });

    SuppressArgs suppress_args;
    auto* suppress = app.add_subcommand("suppress", "Manage the suppression list");
    suppress->require_subcommand(1);
    auto* add = suppress->add_subcommand("add", "Suppress an account or an account pair");
    add->add_option("--account", suppress_args.account, "Account uid")->required();
    add->add_option("--pair-with", suppress_args.pair_with, "Second uid; suppresses only the pair");
    add->add_option("--category", suppress_args.category,
                    "board_member, practice_document, duplicate_account or other")
        ->capture_default_str();
    add->add_option("--reason", suppress_args.reason, "Why this is innocent duplication")->required();
    add->callback([&] { action = [&] { return cmd_suppress_add(common, suppress_args); }; });
    auto* revoke = suppress->add_subcommand("revoke", "Revoke a suppression entry");
    revoke->add_option("id", suppress_args.id, "Entry id")->required();
    revoke->callback([&] { action = [&] { return cmd_suppress_revoke(common, suppress_args); }; });
    auto* list = suppress->add_subcommand("list", "List active entries");
    list->callback([&] { action = [&] { return cmd_suppress_list(common); }; });

    UnpseudonymiseArgs unpseudo_args;
    auto* unpseudo = app.add_subcommand("unpseudonymise", "Reveal the identity behind a uid; every attempt is audited");
    unpseudo->add_option("--uid", unpseudo_args.uid, "Pseudonymous uid")->required();
    unpseudo->add_option("--reason", unpseudo_args.reason, "Reason recorded in the audit log")->required();
    unpseudo->add_option("--actor", unpseudo_args.actor, "Who is asking")->capture_default_str();
    unpseudo->add_option("--key-file", unpseudo_args.key_file, "Pseudonym key file (else $DUPFORGE_PSEUDONYM_KEY)");
    unpseudo->callback([&] { action = [&] { return cmd_unpseudonymise(common, unpseudo_args); }; });

    IndexArgs index_args;
    auto* index = app.add_subcommand("index-dump", "Print the postings of one term");
    index->add_option("term", index_args.term, "Term to look up")->required();
    index->add_option("--granularity", index_args.granularity, "comment or sentence")
        ->check(CLI::IsMember({"comment", "sentence"}))
        ->capture_default_str();
    index->add_option("--index", index_args.index, "Read a saved index instead of building one")
        ->check(CLI::ExistingFile);
    index->add_option("--save", index_args.save, "Save the index to this file");
    index->callback([&] { action = [&] { return cmd_index_dump(common, index_args); }; });

    try {
        app.parse(argc, argv);
    } catch (CLI::Success const& e) {
        return app.exit(e);
    } catch (CLI::ParseError const& e) {
        app.exit(e);
        return 1;
    }

    try {
        return action();
    } catch (UserError const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (ConfigError const& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (StoreError const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (CorpusError const& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (std::invalid_argument const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (std::exception const& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
