#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/pseudonym.hpp"
#include "dupforge/text.hpp"

namespace dupforge {

using json = nlohmann::json;

/// Raised when the corpus as a whole cannot be trusted (duplicate ids,
/// unreadable or inconsistent persisted state).
struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Audience { to_authors, to_editors };
enum class Recommendation { accept, minor, major, reject, other };
enum class AuthorRole { never_author, lead_author, co_author };

inline std::string_view to_string(Audience a) {
    return a == Audience::to_authors ? "to_authors" : "to_editors";
}

inline std::string_view to_string(Recommendation r) {
    switch (r) {
    case Recommendation::accept: return "accept";
    case Recommendation::minor: return "minor";
    case Recommendation::major: return "major";
    case Recommendation::reject: return "reject";
    case Recommendation::other: return "other";
    }
    return "other";
}

inline std::string_view to_string(AuthorRole r) {
    switch (r) {
    case AuthorRole::never_author: return "never_author";
    case AuthorRole::lead_author: return "lead_author";
    case AuthorRole::co_author: return "co_author";
    }
    return "never_author";
}

inline std::optional<Audience> parse_audience(std::string_view s) {
    if (s == "to_authors") return Audience::to_authors;
    if (s == "to_editors") return Audience::to_editors;
    return std::nullopt;
}

inline std::optional<Recommendation> parse_recommendation(std::string_view s) {
    if (s == "accept") return Recommendation::accept;
    if (s == "minor") return Recommendation::minor;
    if (s == "major") return Recommendation::major;
    if (s == "reject") return Recommendation::reject;
    if (s == "other") return Recommendation::other;
    return std::nullopt;
}

/// Calendar date in UTC.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(Date const&) const = default;

    static std::optional<Date> parse(std::string_view s) {
        // Accepts YYYY-MM-DD, optionally followed by a time part.
        if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
            return std::nullopt;
        }
        Date d;
        auto num = [&](std::size_t pos, std::size_t len, int& out) {
            auto const* first = s.data() + pos;
            auto [ptr, ec] = std::from_chars(first, first + len, out);
            return ec == std::errc{} && ptr == first + len;
        };
        if (!num(0, 4, d.year) || !num(5, 2, d.month) || !num(8, 2, d.day)) {
            return std::nullopt;
        }
        if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
            return std::nullopt;
        }
        return d;
    }

    [[nodiscard]] std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    [[nodiscard]] std::string month_key() const { return str().substr(0, 7); }
};

/// One referee's text for one article, one audience field, one round.
struct Comment {
    std::string comment_id;
    std::string article_id;
    std::string referee_uid;
    std::string journal_id;
    Audience audience = Audience::to_authors;
    int round = 1;
    Recommendation recommendation = Recommendation::other;
    Date submitted_at;
    std::string raw_text;
    std::string norm_text;
    std::vector<std::string> sentences;
};

struct Authorship {
    std::string lead;
    std::vector<std::string> co_authors;
};

struct RecommendationLink {
    std::string author_uid;
    std::string referee_uid;
};

struct CorpusStats {
    std::size_t comments = 0;
    std::size_t articles = 0;  // articles the retained comments refer to
    std::size_t journals = 0;
    std::size_t accounts = 0;  // distinct referee accounts
    std::size_t sentences = 0;

    bool operator==(CorpusStats const&) const = default;
};

inline bool is_uid(std::string_view s) {
    if (s.size() < 4 || s.substr(0, 3) != "uid") {
        return false;
    }
    return std::all_of(s.begin() + 3, s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// Immutable once built. Comments are held in comment_id order and their
/// position is the dense document number used by the indexes.
class Corpus {
public:
    Corpus() = default;

    Corpus(std::vector<Comment> comments, std::map<std::string, Authorship> authorship,
           std::map<std::string, std::vector<RecommendationLink>> recommendations,
           std::set<std::string> journal_blocklist)
        : comments_(std::move(comments)),
          authorship_(std::move(authorship)),
          recommendations_(std::move(recommendations)),
          journal_blocklist_(std::move(journal_blocklist)) {
        std::sort(comments_.begin(), comments_.end(),
                  [](Comment const& a, Comment const& b) { return a.comment_id < b.comment_id; });
        for (std::size_t i = 0; i < comments_.size(); ++i) {
            auto const& c = comments_[i];
            if (!by_id_.emplace(c.comment_id, i).second) {
                throw CorpusError("duplicate comment_id: " + c.comment_id);
            }
            accounts_.emplace(c.referee_uid, AuthorRole::never_author);
            articles_.insert(c.article_id);
        }
        for (auto const& [article, a] : authorship_) {
            articles_.insert(article);
            if (!a.lead.empty()) {
                accounts_[a.lead] = AuthorRole::lead_author;
            }
            for (auto const& co : a.co_authors) {
                auto [it, inserted] = accounts_.emplace(co, AuthorRole::co_author);
                if (!inserted && it->second == AuthorRole::never_author) {
                    it->second = AuthorRole::co_author;
                }
            }
        }
        for (auto const& [article, links] : recommendations_) {
            articles_.insert(article);
            for (auto const& l : links) {
                accounts_.emplace(l.author_uid, AuthorRole::never_author);
                accounts_.emplace(l.referee_uid, AuthorRole::never_author);
            }
        }
        stats_ = recount();
    }

    [[nodiscard]] std::vector<Comment> const& comments() const noexcept { return comments_; }
    [[nodiscard]] std::size_t size() const noexcept { return comments_.size(); }
    [[nodiscard]] bool empty() const noexcept { return comments_.empty(); }
    [[nodiscard]] Comment const& operator[](std::size_t i) const { return comments_[i]; }

    [[nodiscard]] std::optional<std::size_t> find(std::string_view comment_id) const {
        auto it = by_id_.find(std::string(comment_id));
        if (it == by_id_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::map<std::string, AuthorRole> const& accounts() const noexcept { return accounts_; }
    [[nodiscard]] bool has_account(std::string const& uid) const { return accounts_.contains(uid); }
    [[nodiscard]] AuthorRole role(std::string const& uid) const {
        auto it = accounts_.find(uid);
        return it == accounts_.end() ? AuthorRole::never_author : it->second;
    }
    [[nodiscard]] std::set<std::string> const& articles() const noexcept { return articles_; }
    [[nodiscard]] std::map<std::string, Authorship> const& authorship() const noexcept { return authorship_; }
    [[nodiscard]] std::map<std::string, std::vector<RecommendationLink>> const& recommendations() const noexcept {
        return recommendations_;
    }
    [[nodiscard]] std::set<std::string> const& journal_blocklist() const noexcept { return journal_blocklist_; }
    [[nodiscard]] CorpusStats const& stats() const noexcept { return stats_; }

    /// Stats recomputed from the comments alone.
    [[nodiscard]] CorpusStats recount() const {
        CorpusStats s;
        std::set<std::string_view> articles;
        std::set<std::string_view> journals;
        std::set<std::string_view> referees;
        for (auto const& c : comments_) {
            articles.insert(c.article_id);
            journals.insert(c.journal_id);
            referees.insert(c.referee_uid);
            s.sentences += c.sentences.size();
        }
        s.comments = comments_.size();
        s.articles = articles.size();
        s.journals = journals.size();
        s.accounts = referees.size();
        return s;
    }

private:
    std::vector<Comment> comments_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, AuthorRole> accounts_;
    std::set<std::string> articles_;
    std::map<std::string, Authorship> authorship_;
    std::map<std::string, std::vector<RecommendationLink>> recommendations_;
    std::set<std::string> journal_blocklist_;
    CorpusStats stats_;
};

// ---------------------------------------------------------------------------
// Ingestion

struct IngestConfig {
    std::set<std::string> journal_blocklist;
    std::size_t min_length = 150;  // code points, measured after normalization
    int max_round = 1;
    /// Used for identities that are not already of the form uidNNN. When
    /// null, such rows are rejected.
    PseudonymMap* pseudonyms = nullptr;
};

enum class ExclusionReason { malformed, blocklisted_journal, later_round, reject_recommendation, too_short };

inline std::string_view to_string(ExclusionReason r) {
    switch (r) {
    case ExclusionReason::malformed: return "malformed";
    case ExclusionReason::blocklisted_journal: return "blocklisted_journal";
    case ExclusionReason::later_round: return "later_round";
    case ExclusionReason::reject_recommendation: return "reject_recommendation";
    case ExclusionReason::too_short: return "too_short";
    }
    return "malformed";
}

struct ExcludedRow {
    std::size_t line = 0;  // 1-based input row
    std::string comment_id;
    ExclusionReason reason = ExclusionReason::malformed;
    std::string detail;
};

struct IngestResult {
    Corpus corpus;
    std::vector<ExcludedRow> excluded;

    [[nodiscard]] std::size_t count(ExclusionReason r) const {
        return static_cast<std::size_t>(
            std::count_if(excluded.begin(), excluded.end(), [r](auto const& e) { return e.reason == r; }));
    }
};

/// A parsed input row: either a comment or an article record.
struct RawComment {
    std::string comment_id;
    std::string article_id;
    std::string referee;
    std::string journal_id;
    std::string audience;
    int round = 0;
    std::string recommendation;
    std::string submitted_at;
    std::string text;
};

struct RawArticle {
    std::string article_id;
    std::string lead_author;
    std::vector<std::string> co_authors;
    std::vector<std::pair<std::string, std::string>> recommended;  // (author, referee)
};

struct RawRow {
    std::size_t line = 0;
    std::optional<RawComment> comment;
    std::optional<RawArticle> article;
    std::string error;  // non-empty when the row could not be parsed
};

namespace detail {

inline std::string get_string(json const& j, char const* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw std::invalid_argument(std::string("missing or non-string field '") + key + "'");
    }
    return it->get<std::string>();
}

}  // namespace detail

inline RawRow parse_json_row(std::string_view line, std::size_t line_no) {
    RawRow row;
    row.line = line_no;
    try {
        auto const j = json::parse(line);
        if (!j.is_object()) {
            throw std::invalid_argument("row is not an object");
        }
        std::string const type = j.value("type", std::string("comment"));
        if (type == "article") {
            RawArticle a;
            a.article_id = detail::get_string(j, "article_id");
            a.lead_author = j.value("lead_author", std::string());
            for (auto const& co : j.value("co_authors", json::array())) {
                a.co_authors.push_back(co.get<std::string>());
            }
            for (auto const& r : j.value("recommended_referees", json::array())) {
                a.recommended.emplace_back(detail::get_string(r, "author"), detail::get_string(r, "referee"));
            }
            row.article = std::move(a);
        } else if (type == "comment") {
            RawComment c;
            c.comment_id = detail::get_string(j, "comment_id");
            c.article_id = detail::get_string(j, "article_id");
            c.referee = detail::get_string(j, "referee");
            c.journal_id = detail::get_string(j, "journal_id");
            c.audience = detail::get_string(j, "audience");
            c.recommendation = detail::get_string(j, "recommendation");
            c.submitted_at = detail::get_string(j, "submitted_at");
            c.text = detail::get_string(j, "text");
            auto it = j.find("round");
            if (it == j.end() || !it->is_number_integer()) {
                throw std::invalid_argument("missing or non-integer field 'round'");
            }
            c.round = it->get<int>();
            row.comment = std::move(c);
        } else {
            throw std::invalid_argument("unknown row type '" + type + "'");
        }
    } catch (std::exception const& e) {
        row.error = e.what();
    }
    return row;
}

inline std::vector<RawRow> read_jsonl(std::istream& in) {
    std::vector<RawRow> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        rows.push_back(parse_json_row(line, n));
    }
    return rows;
}

/// RFC 4180 CSV with a header row naming the comment columns.
inline std::vector<RawRow> read_csv(std::istream& in) {
    auto next_record = [&in](std::vector<std::string>& fields) {
        fields.clear();
        std::string field;
        bool quoted = false;
        bool any = false;
        char c;
        while (in.get(c)) {
            any = true;
            if (quoted) {
                if (c == '"') {
                    if (in.peek() == '"') {
                        in.get(c);
                        field.push_back('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\n') {
                break;
            } else if (c != '\r') {
                field.push_back(c);
            }
        }
        if (any) {
            fields.push_back(std::move(field));
        }
        return any;
    };

    std::vector<RawRow> rows;
    std::vector<std::string> header;
    if (!next_record(header)) {
        return rows;
    }
    std::vector<std::string> fields;
    std::size_t n = 1;
    while (next_record(fields)) {
        ++n;
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        RawRow row;
        row.line = n;
        if (fields.size() != header.size()) {
            row.error = "column count mismatch";
            rows.push_back(std::move(row));
            continue;
        }
        json obj = json::object();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "round") {
                int r = 0;
                auto [p, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), r);
                if (ec == std::errc{} && p == fields[i].data() + fields[i].size()) {
                    obj[header[i]] = r;
                } else {
                    obj[header[i]] = fields[i];
                }
            } else {
                obj[header[i]] = fields[i];
            }
        }
        rows.push_back(parse_json_row(obj.dump(), n));
    }
    return rows;
}

namespace detail {

inline std::string resolve_identity(std::string const& identity, PseudonymMap* map) {
    if (is_uid(identity)) {
        return identity;
    }
    if (map == nullptr) {
        throw std::invalid_argument("raw identity without a pseudonym map");
    }
    return map->pseudonymize(identity);
}

}  // namespace detail

/// A first-round comment to authors built directly from text, normalized
/// and split the same way ingestion does.
inline Comment make_comment(std::string comment_id, std::string article_id, std::string referee_uid,
                            std::string journal_id, std::string text, Date submitted_at = {}) {
    Comment c;
    c.comment_id = std::move(comment_id);
    c.article_id = std::move(article_id);
    c.referee_uid = std::move(referee_uid);
    c.journal_id = std::move(journal_id);
    c.submitted_at = submitted_at;
    c.norm_text = normalize_text(text);
    c.sentences = split_sentences(c.norm_text);
    c.raw_text = std::move(text);
    return c;
}

/// Applies the filters in order blocklist, round, recommendation, length.
/// Malformed rows are excluded with a reason; a duplicate comment_id among
/// well-formed comment rows throws CorpusError.
inline IngestResult ingest(std::vector<RawRow> const& rows, IngestConfig const& config) {
    IngestResult result;
    std::vector<Comment> comments;
    std::set<std::string> seen_ids;
    std::map<std::string, Authorship> authorship;
    std::map<std::string, std::vector<RecommendationLink>> recommendations;

    auto exclude = [&](RawRow const& row, std::string id, ExclusionReason reason, std::string detail = {}) {
        result.excluded.push_back({row.line, std::move(id), reason, std::move(detail)});
    };

    for (auto const& row : rows) {
        if (!row.error.empty()) {
            exclude(row, {}, ExclusionReason::malformed, row.error);
            continue;
        }
        if (row.article) {
            auto const& a = *row.article;
            try {
                Authorship& dst = authorship[a.article_id];
                if (!a.lead_author.empty()) {
                    dst.lead = detail::resolve_identity(a.lead_author, config.pseudonyms);
                }
                for (auto const& co : a.co_authors) {
                    dst.co_authors.push_back(detail::resolve_identity(co, config.pseudonyms));
                }
                for (auto const& [author, referee] : a.recommended) {
                    recommendations[a.article_id].push_back(
                        {detail::resolve_identity(author, config.pseudonyms),
                         detail::resolve_identity(referee, config.pseudonyms)});
                }
            } catch (std::invalid_argument const& e) {
                exclude(row, {}, ExclusionReason::malformed, e.what());
            }
            continue;
        }

        auto const& raw = *row.comment;
        auto const audience = parse_audience(raw.audience);
        auto const rec = parse_recommendation(raw.recommendation);
        auto const date = Date::parse(raw.submitted_at);
        if (!audience || !rec || !date || raw.round < 1 || raw.comment_id.empty() || raw.article_id.empty() ||
            raw.referee.empty()) {
            exclude(row, raw.comment_id, ExclusionReason::malformed, "invalid field value");
            continue;
        }
        if (!seen_ids.insert(raw.comment_id).second) {
            throw CorpusError("duplicate comment_id: " + raw.comment_id);
        }
        if (config.journal_blocklist.contains(raw.journal_id)) {
            exclude(row, raw.comment_id, ExclusionReason::blocklisted_journal);
            continue;
        }
        if (raw.round > config.max_round) {
            exclude(row, raw.comment_id, ExclusionReason::later_round);
            continue;
        }
        if (*rec == Recommendation::reject) {
            exclude(row, raw.comment_id, ExclusionReason::reject_recommendation);
            continue;
        }
        auto norm = normalize_text(raw.text);
        if (unicode::length(norm) < config.min_length) {
            exclude(row, raw.comment_id, ExclusionReason::too_short);
            continue;
        }
        std::string uid;
        try {
            uid = detail::resolve_identity(raw.referee, config.pseudonyms);
        } catch (std::invalid_argument const& e) {
            exclude(row, raw.comment_id, ExclusionReason::malformed, e.what());
            continue;
        }
        Comment c;
        c.comment_id = raw.comment_id;
        c.article_id = raw.article_id;
        c.referee_uid = std::move(uid);
        c.journal_id = raw.journal_id;
        c.audience = *audience;
        c.round = raw.round;
        c.recommendation = *rec;
        c.submitted_at = *date;
        c.raw_text = raw.text;
        c.sentences = split_sentences(norm);
        c.norm_text = std::move(norm);
        comments.push_back(std::move(c));
    }
    result.corpus = Corpus(std::move(comments), std::move(authorship), std::move(recommendations),
                           config.journal_blocklist);
    return result;
}

inline IngestResult ingest_file(std::filesystem::path const& path, IngestConfig const& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorpusError("cannot open " + path.string());
    }
    auto const ext = path.extension().string();
    return ingest(ext == ".csv" ? read_csv(in) : read_jsonl(in), config);
}

// ---------------------------------------------------------------------------
// Persistence: a directory with manifest.json, comments.jsonl, articles.jsonl.

inline constexpr int corpus_format_version = 1;

inline json to_json(Comment const& c) {
    return json{{"comment_id", c.comment_id},
                {"article_id", c.article_id},
                {"referee_uid", c.referee_uid},
                {"journal_id", c.journal_id},
                {"audience", to_string(c.audience)},
                {"round", c.round},
                {"recommendation", to_string(c.recommendation)},
                {"submitted_at", c.submitted_at.str()},
                {"raw_text", c.raw_text},
                {"norm_text", c.norm_text},
                {"sentences", c.sentences}};
}

inline json to_json(CorpusStats const& s) {
    return json{{"comments", s.comments},
                {"articles", s.articles},
                {"journals", s.journals},
                {"accounts", s.accounts},
                {"sentences", s.sentences}};
}

inline void save_corpus(Corpus const& corpus, std::filesystem::path const& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "comments.jsonl", std::ios::binary | std::ios::trunc);
        for (auto const& c : corpus.comments()) {
            out << to_json(c).dump() << '\n';
        }
    }
    {
        std::ofstream out(dir / "articles.jsonl", std::ios::binary | std::ios::trunc);
        std::set<std::string> ids;
        for (auto const& [a, _] : corpus.authorship()) ids.insert(a);
        for (auto const& [a, _] : corpus.recommendations()) ids.insert(a);
        for (auto const& id : ids) {
            json j{{"article_id", id}};
            if (auto it = corpus.authorship().find(id); it != corpus.authorship().end()) {
                j["lead_author"] = it->second.lead;
                j["co_authors"] = it->second.co_authors;
            }
            if (auto it = corpus.recommendations().find(id); it != corpus.recommendations().end()) {
                json recs = json::array();
                for (auto const& l : it->second) {
                    recs.push_back({{"author", l.author_uid}, {"referee", l.referee_uid}});
                }
                j["recommended_referees"] = std::move(recs);
            }
            out << j.dump() << '\n';
        }
    }
    json manifest{{"format_version", corpus_format_version},
                  {"stats", to_json(corpus.stats())},
                  {"journal_blocklist", corpus.journal_blocklist()}};
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
}

inline Corpus load_corpus(std::filesystem::path const& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) {
        throw CorpusError("no corpus at " + dir.string());
    }
    auto const manifest = json::parse(mf);
    if (manifest.at("format_version").get<int>() != corpus_format_version) {
        throw CorpusError("unsupported corpus format version");
    }
    std::vector<Comment> comments;
    {
        std::ifstream in(dir / "comments.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            auto const j = json::parse(line);
            Comment c;
            c.comment_id = j.at("comment_id");
            c.article_id = j.at("article_id");
            c.referee_uid = j.at("referee_uid");
            c.journal_id = j.at("journal_id");
            c.audience = parse_audience(j.at("audience").get<std::string>()).value();
            c.round = j.at("round");
            c.recommendation = parse_recommendation(j.at("recommendation").get<std::string>()).value();
            c.submitted_at = Date::parse(j.at("submitted_at").get<std::string>()).value();
            c.raw_text = j.at("raw_text");
            c.norm_text = j.at("norm_text");
            c.sentences = j.at("sentences").get<std::vector<std::string>>();
            comments.push_back(std::move(c));
        }
    }
    std::map<std::string, Authorship> authorship;
    std::map<std::string, std::vector<RecommendationLink>> recommendations;
    {
        std::ifstream in(dir / "articles.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            auto const j = json::parse(line);
            std::string const id = j.at("article_id");
            if (j.contains("lead_author")) {
                authorship[id] = {j.at("lead_author"), j.at("co_authors").get<std::vector<std::string>>()};
            }
            if (j.contains("recommended_referees")) {
                for (auto const& r : j.at("recommended_referees")) {
                    recommendations[id].push_back({r.at("author"), r.at("referee")});
                }
            }
        }
    }
    Corpus corpus(std::move(comments), std::move(authorship), std::move(recommendations),
                  manifest.at("journal_blocklist").get<std::set<std::string>>());
    auto const& s = manifest.at("stats");
    CorpusStats const stored{s.at("comments"), s.at("articles"), s.at("journals"), s.at("accounts"),
                             s.at("sentences")};
    if (!(stored == corpus.stats())) {
        throw CorpusError("corpus stats manifest does not match contents");
    }
    return corpus;
}

}  // namespace dupforge
