#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/corpus.hpp"
#include "dupforge/evidence.hpp"
#include "dupforge/suppression.hpp"

namespace dupforge {

struct GraphNode {
    std::string uid;
    AuthorRole role = AuthorRole::never_author;
    std::size_t dup_count = 0;  // distinct duplicated comments the account submitted
    bool referee = true;        // false for authors reached only through reviewed-for edges
    std::set<Method> methods;

    bool operator==(GraphNode const&) const = default;
};

/// Undirected, `a < b`. Weight counts distinct duplicated comment pairs.
struct DuplicationEdge {
    std::string a;
    std::string b;
    std::size_t weight = 0;
    std::set<Method> methods;

    bool operator==(DuplicationEdge const&) const = default;
};

/// The referee reviewed `count` of the author's articles.
struct ReviewedForEdge {
    std::string referee;
    std::string author;
    std::size_t count = 0;

    bool operator==(ReviewedForEdge const&) const = default;
};

struct RankEntry {
    std::string uid;
    double pagerank = 0;
    std::size_t rank = 0;  // 1-based
};

class EvidenceGraph {
public:
    EvidenceGraph() = default;
    EvidenceGraph(std::vector<GraphNode> nodes, std::vector<DuplicationEdge> edges, std::vector<ReviewedForEdge> reviewed)
        : nodes_(std::move(nodes)), edges_(std::move(edges)), reviewed_(std::move(reviewed)) {
        std::sort(nodes_.begin(), nodes_.end(), [](auto const& x, auto const& y) { return x.uid < y.uid; });
        std::sort(edges_.begin(), edges_.end(),
                  [](auto const& x, auto const& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
        std::sort(reviewed_.begin(), reviewed_.end(), [](auto const& x, auto const& y) {
            return std::tie(x.referee, x.author) < std::tie(y.referee, y.author);
        });
        for (auto const& e : edges_) {
            if (e.a >= e.b || e.weight == 0) {
                throw std::invalid_argument("duplication edges need a < b and positive weight");
            }
        }
    }

    [[nodiscard]] std::vector<GraphNode> const& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::vector<DuplicationEdge> const& edges() const noexcept { return edges_; }
    [[nodiscard]] std::vector<ReviewedForEdge> const& reviewed_for() const noexcept { return reviewed_; }

    [[nodiscard]] GraphNode const* node(std::string const& uid) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), uid,
                                   [](GraphNode const& n, std::string const& u) { return n.uid < u; });
        return it != nodes_.end() && it->uid == uid ? &*it : nullptr;
    }

    [[nodiscard]] DuplicationEdge const* edge(std::string a, std::string b) const {
        if (b < a) {
            std::swap(a, b);
        }
        for (auto const& e : edges_) {
            if (e.a == a && e.b == b) {
                return &e;
            }
        }
        return nullptr;
    }

    /// Accounts with at least one duplication edge, sorted.
    [[nodiscard]] std::vector<std::string> duplication_nodes() const {
        std::set<std::string> out;
        for (auto const& e : edges_) {
            out.insert(e.a);
            out.insert(e.b);
        }
        return {out.begin(), out.end()};
    }

private:
    std::vector<GraphNode> nodes_;
    std::vector<DuplicationEdge> edges_;
    std::vector<ReviewedForEdge> reviewed_;
};

/// Suppressed evidence and accounts are left out. Throws if evidence names
/// a comment or account the corpus does not have.
inline EvidenceGraph build_graph(std::vector<PairEvidence> const& evidence, Corpus const& corpus,
                                 SuppressionList const& suppression) {
    std::map<std::pair<std::string, std::string>, std::set<std::pair<std::string, std::string>>> pairs;
    std::map<std::pair<std::string, std::string>, std::set<Method>> methods;
    std::map<std::string, std::set<std::string>> duplicated;
    std::map<std::string, std::set<Method>> node_methods;

    for (auto const& ev : evidence) {
        for (auto const* uid : {&ev.account_a, &ev.account_b}) {
            if (!corpus.has_account(*uid)) {
                throw std::invalid_argument("evidence references unknown account " + *uid);
            }
        }
        if (ev.suppressed || suppression.suppresses(ev)) {
            continue;
        }
        std::vector<std::string> left;
        std::vector<std::string> right;
        for (auto const& cid : ev.comment_ids) {
            auto const idx = corpus.find(cid);
            if (!idx) {
                throw std::invalid_argument("evidence references unknown comment " + cid);
            }
            auto const& owner = corpus[*idx].referee_uid;
            if (owner == ev.account_a) {
                left.push_back(cid);
            } else if (owner == ev.account_b) {
                right.push_back(cid);
            }
        }
        auto const key = std::make_pair(ev.account_a, ev.account_b);
        auto& cp = pairs[key];
        for (auto const& x : left) {
            for (auto const& y : right) {
                cp.emplace(x, y);
            }
        }
        methods[key].insert(ev.method);
        duplicated[ev.account_a].insert(left.begin(), left.end());
        duplicated[ev.account_b].insert(right.begin(), right.end());
        node_methods[ev.account_a].insert(ev.method);
        node_methods[ev.account_b].insert(ev.method);
    }

    std::vector<DuplicationEdge> edges;
    for (auto const& [key, cp] : pairs) {
        edges.push_back({key.first, key.second, std::max<std::size_t>(cp.size(), 1), methods[key]});
    }
    std::vector<GraphNode> nodes;
    std::set<std::string> referees;
    for (auto const& [uid, ms] : node_methods) {
        nodes.push_back({uid, corpus.role(uid), duplicated[uid].size(), true, ms});
        referees.insert(uid);
    }

    std::map<std::pair<std::string, std::string>, std::set<std::string>> reviewed_articles;
    for (auto const& c : corpus.comments()) {
        if (!referees.contains(c.referee_uid)) {
            continue;
        }
        auto it = corpus.authorship().find(c.article_id);
        if (it == corpus.authorship().end()) {
            continue;
        }
        std::set<std::string> authors(it->second.co_authors.begin(), it->second.co_authors.end());
        if (!it->second.lead.empty()) {
            authors.insert(it->second.lead);
        }
        for (auto const& author : authors) {
            if (author != c.referee_uid && !suppression.account_suppressed(author)) {
                reviewed_articles[{c.referee_uid, author}].insert(c.article_id);
            }
        }
    }
    std::vector<ReviewedForEdge> reviewed;
    std::set<std::string> authors_only;
    for (auto const& [key, articles] : reviewed_articles) {
        reviewed.push_back({key.first, key.second, articles.size()});
        if (!referees.contains(key.second)) {
            authors_only.insert(key.second);
        }
    }
    for (auto const& uid : authors_only) {
        nodes.push_back({uid, corpus.role(uid), 0, false, {}});
    }
    return {std::move(nodes), std::move(edges), std::move(reviewed)};
}

// ---------------------------------------------------------------------------
// Ranking and clustering over the duplication edges.

struct PageRankOptions {
    double damping = 0.85;
    double tol = 1e-6;  // on the L1 change between iterations
    std::size_t max_iter = 100;
    bool weighted = true;
};

/// Weighted PageRank with every undirected edge taken in both directions.
/// Sorted by score descending, then uid.
inline std::vector<RankEntry> pagerank(EvidenceGraph const& graph, PageRankOptions const& opt = {}) {
    auto const ids = graph.duplication_nodes();
    std::size_t const n = ids.size();
    if (n == 0) {
        return {};
    }
    auto index = [&ids](std::string const& uid) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), uid) - ids.begin());
    };
    struct Arc {
        std::size_t from;
        std::size_t to;
        double w;
    };
    std::vector<Arc> arcs;
    std::vector<double> out_weight(n, 0.0);
    for (auto const& e : graph.edges()) {
        double const w = opt.weighted ? static_cast<double>(e.weight) : 1.0;
        auto const a = index(e.a);
        auto const b = index(e.b);
        arcs.push_back({a, b, w});
        arcs.push_back({b, a, w});
        out_weight[a] += w;
        out_weight[b] += w;
    }
    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
        std::fill(next.begin(), next.end(), (1.0 - opt.damping) / static_cast<double>(n));
        for (auto const& arc : arcs) {
            next[arc.to] += opt.damping * x[arc.from] * arc.w / out_weight[arc.from];
        }
        double err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            err += std::abs(next[i] - x[i]);
        }
        x.swap(next);
        if (err < opt.tol) {
            break;
        }
    }
    double const total = std::accumulate(x.begin(), x.end(), 0.0);
    std::vector<RankEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({ids[i], x[i] / total, 0});
    }
    std::stable_sort(out.begin(), out.end(), [](auto const& p, auto const& q) { return p.pagerank > q.pagerank; });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].rank = i + 1;
    }
    return out;
}

/// Connected components of the duplication subgraph, largest first; ties
/// broken by smallest member. Members are sorted.
inline std::vector<std::vector<std::string>> components(EvidenceGraph const& graph) {
    auto const ids = graph.duplication_nodes();
    std::vector<std::size_t> parent(ids.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    auto index = [&ids](std::string const& uid) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), uid) - ids.begin());
    };
    for (auto const& e : graph.edges()) {
        auto const ra = find(index(e.a));
        auto const rb = find(index(e.b));
        if (ra != rb) {
            parent[std::max(ra, rb)] = std::min(ra, rb);
        }
    }
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        groups[find(i)].push_back(ids[i]);
    }
    std::vector<std::vector<std::string>> out;
    for (auto& [root, members] : groups) {
        out.push_back(std::move(members));
    }
    std::stable_sort(out.begin(), out.end(), [](auto const& x, auto const& y) { return x.size() > y.size(); });
    return out;
}

struct Classification {
    std::vector<std::vector<std::string>> clusters;
    std::vector<std::vector<std::string>> pairs;  // components below the boundary
};

inline Classification classify(EvidenceGraph const& graph, std::size_t cluster_min = 4) {
    Classification c;
    for (auto& comp : components(graph)) {
        (comp.size() >= cluster_min ? c.clusters : c.pairs).push_back(std::move(comp));
    }
    return c;
}

struct Recommender {
    std::string author_uid;
    std::string article_id;

    bool operator==(Recommender const&) const = default;
    auto operator<=>(Recommender const&) const = default;
};

/// Every flagged referee maps to the authors who recommended it, sorted.
inline std::map<std::string, std::vector<Recommender>> recommenders_of(std::set<std::string> const& flagged,
                                                                       Corpus const& corpus) {
    std::map<std::string, std::vector<Recommender>> out;
    for (auto const& uid : flagged) {
        out[uid];
    }
    for (auto const& [article, links] : corpus.recommendations()) {
        for (auto const& link : links) {
            if (flagged.contains(link.referee_uid)) {
                out[link.referee_uid].push_back({link.author_uid, article});
            }
        }
    }
    for (auto& [uid, list] : out) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exports.

inline nlohmann::json methods_json(std::set<Method> const& ms) {
    auto arr = nlohmann::json::array();
    for (auto m : ms) {
        arr.push_back(to_string(m));
    }
    return arr;
}

/// Nodes with attributes, then typed edges:
/// `{"nodes": [...], "edges": [{"type": "duplication"|"reviewed_for", ...}]}`.
inline nlohmann::json graph_to_json(EvidenceGraph const& graph, std::vector<RankEntry> const& ranking = {}) {
    std::map<std::string, RankEntry const*> rank_of;
    for (auto const& r : ranking) {
        rank_of[r.uid] = &r;
    }
    std::map<std::string, std::size_t> component_of;
    auto const comps = components(graph);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (auto const& uid : comps[i]) {
            component_of[uid] = i;
        }
    }
    auto nodes = nlohmann::json::array();
    for (auto const& n : graph.nodes()) {
        nlohmann::json j{{"id", n.uid},
                         {"author_role", to_string(n.role)},
                         {"dup_count", n.dup_count},
                         {"referee", n.referee},
                         {"methods", methods_json(n.methods)}};
        if (auto it = rank_of.find(n.uid); it != rank_of.end()) {
            j["pagerank"] = it->second->pagerank;
            j["rank"] = it->second->rank;
        }
        if (auto it = component_of.find(n.uid); it != component_of.end()) {
            j["component"] = it->second;
        }
        nodes.push_back(std::move(j));
    }
    auto edges = nlohmann::json::array();
    for (auto const& e : graph.edges()) {
        edges.push_back({{"type", "duplication"},
                         {"source", e.a},
                         {"target", e.b},
                         {"weight", e.weight},
                         {"methods", methods_json(e.methods)}});
    }
    for (auto const& e : graph.reviewed_for()) {
        edges.push_back({{"type", "reviewed_for"}, {"source", e.referee}, {"target", e.author}, {"weight", e.count}});
    }
    return {{"nodes", nodes}, {"edges", edges}, {"components", comps.size()}};
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string graph_to_graphml(EvidenceGraph const& graph) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
          "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
          "  <key id=\"role\" for=\"node\" attr.name=\"author_role\" attr.type=\"string\"/>\n"
          "  <key id=\"dup\" for=\"node\" attr.name=\"dup_count\" attr.type=\"int\"/>\n"
          "  <key id=\"referee\" for=\"node\" attr.name=\"referee\" attr.type=\"boolean\"/>\n"
          "  <key id=\"type\" for=\"edge\" attr.name=\"type\" attr.type=\"string\"/>\n"
          "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
          "  <key id=\"methods\" for=\"edge\" attr.name=\"methods\" attr.type=\"string\"/>\n"
          "  <graph id=\"evidence\" edgedefault=\"undirected\">\n";
    for (auto const& n : graph.nodes()) {
        os << "    <node id=\"" << xml_escape(n.uid) << "\"><data key=\"role\">" << to_string(n.role)
           << "</data><data key=\"dup\">" << n.dup_count << "</data><data key=\"referee\">"
           << (n.referee ? "true" : "false") << "</data></node>\n";
    }
    for (auto const& e : graph.edges()) {
        std::string ms;
        for (auto m : e.methods) {
            ms += (ms.empty() ? "" : ",") + to_string(m);
        }
        os << "    <edge source=\"" << xml_escape(e.a) << "\" target=\"" << xml_escape(e.b)
           << "\"><data key=\"type\">duplication</data><data key=\"weight\">" << e.weight
           << "</data><data key=\"methods\">" << ms << "</data></edge>\n";
    }
    for (auto const& e : graph.reviewed_for()) {
        os << "    <edge source=\"" << xml_escape(e.referee) << "\" target=\"" << xml_escape(e.author)
           << "\" directed=\"true\"><data key=\"type\">reviewed_for</data><data key=\"weight\">" << e.count
           << "</data></edge>\n";
    }
    os << "  </graph>\n</graphml>\n";
    return os.str();
}

/// Two columns: referee account and score.
inline std::string ranking_to_csv(std::vector<RankEntry> const& ranking) {
    std::ostringstream os;
    os << "referee_account,pagerank\n";
    char buf[32];
    for (auto const& r : ranking) {
        std::snprintf(buf, sizeof buf, "%.6f", r.pagerank);
        os << r.uid << ',' << buf << '\n';
    }
    return os.str();
}

}  // namespace dupforge
