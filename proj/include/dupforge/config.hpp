#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dupforge/graph.hpp"
#include "dupforge/search.hpp"

namespace dupforge {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Everything a pipeline run needs besides the corpus and the suppression
/// list. Read from a `key = value` file; `#` starts a comment.
struct PipelineConfig {
    SearchConfig search;
    PageRankOptions pagerank;
    std::size_t cluster_min = 4;
    std::string curated_file;  // one sentence per line, relative to the config file

    void validate() const {
        auto unit = [](double x, char const* name) {
            if (!(x >= 0.0 && x <= 1.0)) {
                throw ConfigError(std::string(name) + " must lie in [0, 1]");
            }
        };
        unit(search.search2_threshold, "search2_threshold");
        unit(search.lsh_threshold, "lsh_threshold");
        unit(search.min_bm25_norm, "min_bm25_norm");
        if (!(search.keep_fraction > 0.0 && search.keep_fraction <= 1.0)) {
            throw ConfigError("keep_fraction must lie in (0, 1]");
        }
        if (search.shingle_k == 0 || search.num_perm == 0 || search.top_k == 0) {
            throw ConfigError("shingle_k, num_perm and top_k must be positive");
        }
        if (!(pagerank.damping > 0.0 && pagerank.damping < 1.0)) {
            throw ConfigError("damping must lie in (0, 1)");
        }
        if (!(pagerank.tol > 0.0) || pagerank.max_iter == 0) {
            throw ConfigError("tol and max_iter must be positive");
        }
        if (cluster_min < 2) {
            throw ConfigError("cluster_min must be at least 2");
        }
        if (search.searches.empty()) {
            throw ConfigError("no searches selected");
        }
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    auto const* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("bad value for " + std::string(key) + ": " + std::string(value));
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError("bad value for " + std::string(key) + ": " + std::string(value));
}

inline std::set<Method> parse_searches(std::string_view value) {
    std::set<Method> out;
    std::stringstream ss{std::string(value)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto const m = parse_method(trim(item));
        if (!m) {
            throw ConfigError("unknown search: " + item);
        }
        out.insert(*m);
    }
    return out;
}

}  // namespace detail

inline void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_number;
    if (key == "exact_min_words") {
        c.search.exact_min_words = parse_number<std::size_t>(key, value);
    } else if (key == "search2_threshold") {
        c.search.search2_threshold = parse_number<double>(key, value);
    } else if (key == "shingle_k") {
        c.search.shingle_k = parse_number<std::size_t>(key, value);
    } else if (key == "num_perm") {
        c.search.num_perm = parse_number<std::size_t>(key, value);
    } else if (key == "lsh_threshold") {
        c.search.lsh_threshold = parse_number<double>(key, value);
    } else if (key == "top_k") {
        c.search.top_k = parse_number<std::size_t>(key, value);
    } else if (key == "keep_fraction") {
        c.search.keep_fraction = parse_number<double>(key, value);
    } else if (key == "min_bm25_norm") {
        c.search.min_bm25_norm = parse_number<double>(key, value);
    } else if (key == "search6_min_terms") {
        c.search.search6_min_terms = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        c.search.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "searches") {
        c.search.searches = detail::parse_searches(value);
    } else if (key == "cluster_min") {
        c.cluster_min = parse_number<std::size_t>(key, value);
    } else if (key == "damping") {
        c.pagerank.damping = parse_number<double>(key, value);
    } else if (key == "tol") {
        c.pagerank.tol = parse_number<double>(key, value);
    } else if (key == "max_iter") {
        c.pagerank.max_iter = parse_number<std::size_t>(key, value);
    } else if (key == "weighted") {
        c.pagerank.weighted = detail::parse_bool(key, value);
    } else if (key == "curated_file") {
        c.curated_file = std::string(value);
    } else {
        throw ConfigError("unknown config key: " + std::string(key));
    }
}

/// Throws ConfigError on unknown or repeated keys, malformed lines and out
/// of range values. Keys not given keep their defaults.
inline PipelineConfig parse_config(std::istream& in) {
    PipelineConfig c;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto const hash = line.find('#');
        auto const body = detail::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        auto const eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        auto const key = std::string(detail::trim(body.substr(0, eq)));
        auto const value = detail::trim(body.substr(eq + 1));
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": repeated key " + key);
        }
        try {
            set_config_value(c, key, value);
        } catch (ConfigError const& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline PipelineConfig parse_config(std::string const& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Reads the config and, if it names one, the curated sentence file.
inline PipelineConfig load_config(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    auto c = parse_config(in);
    if (!c.curated_file.empty()) {
        auto const curated = path.parent_path() / c.curated_file;
        std::ifstream f(curated);
        if (!f) {
            throw ConfigError("cannot read curated sentences " + curated.string());
        }
        std::string line;
        while (std::getline(f, line)) {
            if (!detail::trim(line).empty()) {
                c.search.curated_sentences.push_back(std::string(detail::trim(line)));
            }
        }
    }
    return c;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    auto const [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

/// Canonical text form; parse_config(to_text(c)) reproduces c apart from the
/// curated sentences themselves.
inline std::string to_text(PipelineConfig const& c) {
    std::string searches;
    for (auto m : c.search.searches) {
        searches += (searches.empty() ? "" : ",") + to_string(m);
    }
    std::ostringstream out;
    out << "exact_min_words = " << c.search.exact_min_words << "\n"
        << "search2_threshold = " << format_double(c.search.search2_threshold) << "\n"
        << "shingle_k = " << c.search.shingle_k << "\n"
        << "num_perm = " << c.search.num_perm << "\n"
        << "lsh_threshold = " << format_double(c.search.lsh_threshold) << "\n"
        << "top_k = " << c.search.top_k << "\n"
        << "keep_fraction = " << format_double(c.search.keep_fraction) << "\n"
        << "min_bm25_norm = " << format_double(c.search.min_bm25_norm) << "\n"
        << "search6_min_terms = " << c.search.search6_min_terms << "\n"
        << "seed = " << c.search.seed << "\n"
        << "searches = " << searches << "\n"
        << "cluster_min = " << c.cluster_min << "\n"
        << "damping = " << format_double(c.pagerank.damping) << "\n"
        << "tol = " << format_double(c.pagerank.tol) << "\n"
        << "max_iter = " << c.pagerank.max_iter << "\n"
        << "weighted = " << (c.pagerank.weighted ? "true" : "false") << "\n";
    if (!c.curated_file.empty()) {
        out << "curated_file = " << c.curated_file << "\n";
    }
    return out.str();
}

inline nlohmann::json to_json(PipelineConfig const& c) {
    auto j = to_json(c.search);
    j["cluster_min"] = c.cluster_min;
    j["damping"] = c.pagerank.damping;
    j["tol"] = c.pagerank.tol;
    j["max_iter"] = c.pagerank.max_iter;
    j["weighted"] = c.pagerank.weighted;
    return j;
}

}  // namespace dupforge
