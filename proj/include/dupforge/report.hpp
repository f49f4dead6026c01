#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dupforge/corpus.hpp"
#include "dupforge/graph.hpp"
#include "dupforge/search.hpp"

namespace dupforge::report {

inline std::string fixed(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

inline std::string csv_field(std::string const& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

// ---------------------------------------------------------------------------
// Account and article summary.

struct SummaryRow {
    std::string table;  // "accounts" or "articles"
    std::string label;
    std::size_t count = 0;
    double percent = 0;  // of the first row of the same table
};

/// Accounts of the largest duplication component, empty when it is smaller
/// than `cluster_min`.
inline std::set<std::string> largest_cluster(RunRecord const& run, Corpus const& corpus, std::size_t cluster_min = 4) {
    auto const graph = build_graph(run.evidence, corpus, SuppressionList{});
    auto const comps = components(graph);
    if (comps.empty() || comps.front().size() < cluster_min) {
        return {};
    }
    return {comps.front().begin(), comps.front().end()};
}

inline std::vector<SummaryRow> summary_report(RunRecord const& run, Corpus const& corpus, std::size_t cluster_min = 4) {
    auto const found = accounts_of(run.evidence);
    std::set<std::string> removed;
    for (auto const& uid : accounts_of(run.suppressed)) {
        if (!found.contains(uid)) {
            removed.insert(uid);
        }
    }
    auto const cluster = largest_cluster(run, corpus, cluster_min);

    std::set<std::string_view> cluster_articles;
    std::set<std::string_view> dup_articles;
    for (auto const& c : corpus.comments()) {
        if (cluster.contains(c.referee_uid)) {
            cluster_articles.insert(c.article_id);
        }
        if (found.contains(c.referee_uid)) {
            dup_articles.insert(c.article_id);
        }
    }

    auto const accounts = corpus.stats().accounts;
    auto const articles = corpus.stats().articles;
    auto pct = [](std::size_t n, std::size_t total) {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(total);
    };
    std::vector<SummaryRow> rows{
        {"accounts", "No. unique review accounts", accounts, 0},
        {"accounts", "No. unique review accounts removed due to innocent duplication", removed.size(), 0},
        {"accounts", "No. unique review accounts in paper-mill cluster", cluster.size(), 0},
        {"accounts", "No. unique review accounts that produced duplicates or partial duplicates", found.size(), 0},
        {"articles", "No. articles", articles, 0},
        {"articles", "No. articles with reviews from cluster review accounts", cluster_articles.size(), 0},
        {"articles", "No. articles with reviews from any account that produced duplicates", dup_articles.size(), 0},
    };
    for (auto& r : rows) {
        r.percent = pct(r.count, r.table == "accounts" ? accounts : articles);
    }
    return rows;
}

inline std::string summary_csv(std::vector<SummaryRow> const& rows) {
    std::string out = "table,label,count,percent\n";
    for (auto const& r : rows) {
        out += r.table + "," + csv_field(r.label) + "," + std::to_string(r.count) + "," + fixed(r.percent) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Search comparison and timings.

/// cell(i, j): accounts found by search i and not by search j.
struct OverlapMatrix {
    std::vector<Method> searches;
    std::vector<std::vector<std::size_t>> cells;

    [[nodiscard]] std::size_t cell(Method a, Method b) const {
        auto const i = std::find(searches.begin(), searches.end(), a) - searches.begin();
        auto const j = std::find(searches.begin(), searches.end(), b) - searches.begin();
        return cells.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j));
    }
};

inline OverlapMatrix overlap_matrix(std::map<Method, std::set<std::string>> const& found) {
    OverlapMatrix m;
    for (auto const& [method, _] : found) {
        m.searches.push_back(method);
    }
    for (auto const& [a, sa] : found) {
        auto& row = m.cells.emplace_back();
        for (auto const& [b, sb] : found) {
            std::size_t n = 0;
            for (auto const& uid : sa) {
                n += sb.contains(uid) ? 0 : 1;
            }
            row.push_back(n);
        }
    }
    return m;
}

inline OverlapMatrix overlap_matrix(RunRecord const& run) {
    std::map<Method, std::set<std::string>> found;
    for (auto m : run.methods_run()) {
        found[m] = run.accounts(m);
    }
    return overlap_matrix(found);
}

inline std::string overlap_csv(OverlapMatrix const& m) {
    std::string out = "search";
    for (auto s : m.searches) {
        out += "," + to_string(s);
    }
    out += "\n";
    for (std::size_t i = 0; i < m.searches.size(); ++i) {
        out += to_string(m.searches[i]);
        for (auto n : m.cells[i]) {
            out += "," + std::to_string(n);
        }
        out += "\n";
    }
    return out;
}

inline std::string timing_csv(RunRecord const& run) {
    std::string out = "search,time_to_index_s,time_to_search_s,accounts_found,evidence\n";
    auto timings = run.timings;
    std::sort(timings.begin(), timings.end(), [](auto const& a, auto const& b) { return a.method < b.method; });
    for (auto const& t : timings) {
        out += to_string(t.method) + "," + fixed(t.index_seconds, 6) + "," + fixed(t.search_seconds, 6) + "," +
               std::to_string(t.accounts_found) + "," + std::to_string(t.evidence_count) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Distributions.

inline std::string histogram_csv(Histogram const* h) {
    std::string out = "bin_lo,bin_hi,count\n";
    if (h == nullptr) {
        return out;
    }
    for (std::size_t i = 0; i < h->counts.size(); ++i) {
        out += fixed(h->edges[i]) + "," + fixed(h->edges[i + 1]) + "," + std::to_string(h->counts[i]) + "\n";
    }
    return out;
}

/// Sentences by number of distinct referees using them; the log column is
/// the y-axis of the usual chart.
inline std::string sentence_frequency_csv(Histogram const* h) {
    std::string out = "referees,sentences,log10_sentences\n";
    if (h == nullptr) {
        return out;
    }
    for (std::size_t i = 0; i < h->counts.size(); ++i) {
        out += std::to_string(static_cast<std::uint64_t>(h->edges[i])) + "," + std::to_string(h->counts[i]) + "," +
               fixed(std::log10(static_cast<double>(h->counts[i])), 6) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monthly share of comments from cluster accounts.

struct SeriesPoint {
    std::string period;  // YYYY-MM
    std::size_t comments = 0;
    std::size_t cluster_comments = 0;
    double percent = 0;
};

inline std::vector<SeriesPoint> cluster_timeseries(Corpus const& corpus, std::set<std::string> const& cluster) {
    std::map<std::string, SeriesPoint> by_month;
    for (auto const& c : corpus.comments()) {
        auto& p = by_month[c.submitted_at.month_key()];
        ++p.comments;
        p.cluster_comments += cluster.contains(c.referee_uid) ? 1 : 0;
    }
    std::vector<SeriesPoint> out;
    if (by_month.empty()) {
        return out;
    }
    auto const first = by_month.begin()->first;
    auto const last = by_month.rbegin()->first;
    int year = std::stoi(first.substr(0, 4));
    int month = std::stoi(first.substr(5, 2));
    while (true) {
        char key[16];
        std::snprintf(key, sizeof(key), "%04d-%02d", year, month);
        auto p = by_month.contains(key) ? by_month[key] : SeriesPoint{};
        p.period = key;
        p.percent = p.comments == 0 ? 0.0
                                    : 100.0 * static_cast<double>(p.cluster_comments) / static_cast<double>(p.comments);
        out.push_back(p);
        if (key == last) {
            break;
        }
        if (++month == 13) {
            month = 1;
            ++year;
        }
    }
    return out;
}

inline std::string series_csv(std::vector<SeriesPoint> const& series) {
    std::string out = "month,comments,cluster_comments,percent\n";
    for (auto const& p : series) {
        out += p.period + "," + std::to_string(p.comments) + "," + std::to_string(p.cluster_comments) + "," +
               fixed(p.percent) + "\n";
    }
    return out;
}

inline std::string peak_period(std::vector<SeriesPoint> const& series) {
    auto it = std::max_element(series.begin(), series.end(),
                               [](auto const& a, auto const& b) { return a.percent < b.percent; });
    return it == series.end() ? std::string{} : it->period;
}

// ---------------------------------------------------------------------------
// Minimal SVG bar charts.

inline std::string bar_chart_svg(std::string const& title, std::vector<std::string> const& labels,
                                 std::vector<double> const& values, bool log_y = false) {
    constexpr double width = 640;
    constexpr double height = 360;
    constexpr double margin = 40;
    auto transform = [&](double v) { return log_y ? std::log10(1.0 + std::max(0.0, v)) : std::max(0.0, v); };
    double top = 0;
    for (double v : values) {
        top = std::max(top, transform(v));
    }
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title)
        << (log_y ? " (log scale)" : "") << "</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    double const slot = values.empty() ? 0 : (width - 2 * margin) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double const h = top > 0 ? (height - 2 * margin - 20) * transform(values[i]) / top : 0;
        out << "<rect x=\"" << fixed(margin + slot * static_cast<double>(i), 2) << "\" y=\""
            << fixed(height - margin - h, 2) << "\" width=\"" << fixed(std::max(slot * 0.9, 0.5), 2) << "\" height=\""
            << fixed(h, 2) << "\" fill=\"steelblue\"><title>" << xml_escape(labels[i]) << ": " << fixed(values[i])
            << "</title></rect>\n";
    }
    if (!labels.empty()) {
        out << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(labels.front()) << "</text>\n";
        out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
            << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << xml_escape(labels.back())
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

inline std::string histogram_svg(std::string const& title, Histogram const* h, bool log_y = false) {
    std::vector<std::string> labels;
    std::vector<double> values;
    if (h != nullptr) {
        for (std::size_t i = 0; i < h->counts.size(); ++i) {
            labels.push_back(fixed(h->edges[i], 2));
            values.push_back(static_cast<double>(h->counts[i]));
        }
    }
    return bar_chart_svg(title, labels, values, log_y);
}

// ---------------------------------------------------------------------------
// Report directory.

struct ReportOptions {
    std::size_t cluster_min = 4;
    bool svg = false;
};

/// Every report file as (name, contents), in a fixed order.
inline std::vector<std::pair<std::string, std::string>> render_reports(RunRecord const& run, Corpus const& corpus,
                                                                       ReportOptions const& opt = {}) {
    auto const fig1 = run.histogram("fig1_duplicate_counts");
    auto const fig3 = run.histogram("fig3_sentence_jaccard");
    auto const table2 = run.histogram("table2_sentence_frequency");
    auto const series = cluster_timeseries(corpus, largest_cluster(run, corpus, opt.cluster_min));

    std::vector<std::pair<std::string, std::string>> out{
        {"summary.csv", summary_csv(summary_report(run, corpus, opt.cluster_min))},
        {"overlap_matrix.csv", overlap_csv(overlap_matrix(run))},
        {"timings.csv", timing_csv(run)},
        {"fig1_hist.csv", histogram_csv(fig1)},
        {"fig3_hist.csv", histogram_csv(fig3)},
        {"table2_freq.csv", sentence_frequency_csv(table2)},
        {"fig9_series.csv", series_csv(series)},
    };
    if (opt.svg) {
        std::vector<std::string> months;
        std::vector<double> percents;
        for (auto const& p : series) {
            months.push_back(p.period);
            percents.push_back(p.percent);
        }
        out.emplace_back("fig1_hist.svg", histogram_svg("Comments per exact-duplicate group", fig1));
        out.emplace_back("fig3_hist.svg", histogram_svg("Sentence Jaccard between comment pairs", fig3, true));
        out.emplace_back("table2_freq.svg", histogram_svg("Sentences by number of referees", table2, true));
        out.emplace_back("fig9_series.svg", bar_chart_svg("Share of comments from cluster accounts (%)", months, percents));
    }
    return out;
}

/// Writes the report files into `dir` and returns their paths.
inline std::vector<std::filesystem::path> write_reports(std::filesystem::path const& dir, RunRecord const& run,
                                                        Corpus const& corpus, ReportOptions const& opt = {}) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (auto const& [name, contents] : render_reports(run, corpus, opt)) {
        auto const path = dir / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << contents;
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        paths.push_back(path);
    }
    return paths;
}

}  // namespace dupforge::report
