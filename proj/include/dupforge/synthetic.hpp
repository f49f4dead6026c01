#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dupforge/corpus.hpp"
#include "dupforge/suppression.hpp"

// Seeded synthetic review corpora with a planted duplication ring and the
// ground truth needed to score a run against it.

namespace dupforge {

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t innocent_accounts = 2000;
    double comments_per_account = 5.0;  // mean over innocent accounts
    std::size_t mill_accounts = 47;
    std::size_t mill_comments_per_account = 10;
    std::size_t mill_templates = 6;
    double mutation_rate = 0.2;  // per template sentence
    std::size_t weak_link_accounts = 5;
    std::size_t typo_sentences = 3;
    std::size_t typo_accounts_per_sentence = 4;
    std::size_t recommending_authors = 10;
    std::size_t recommended_mill_referees = 2;
    std::size_t innocent_recommendations = 500;
    bool innocent_duplicates = true;  // board member, practice documents, duplicate account
    double noise_fraction = 0.04;     // extra rows that ingestion filters out
    std::string start_month = "2016-01";
    std::size_t months = 72;
    std::string peak_month = "2018-03";

    void validate() const {
        if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
            throw std::invalid_argument("mutation rate must lie in [0, 1]");
        }
        if (comments_per_account < 1.0 && innocent_accounts > 0) {
            throw std::invalid_argument("innocent accounts need at least one comment each");
        }
        if (noise_fraction < 0.0 || months == 0) {
            throw std::invalid_argument("bad noise fraction or month count");
        }
        if (mill_accounts > 0 && mill_templates == 0) {
            throw std::invalid_argument("a mill needs at least one template");
        }
        if (mill_accounts > 0 && mill_templates > mill_accounts * mill_comments_per_account) {
            throw std::invalid_argument("more mill templates than mill comments");
        }
        if (recommended_mill_referees > mill_accounts) {
            throw std::invalid_argument("more recommended mill referees than mill accounts");
        }
    }
};

inline nlohmann::json to_json(SyntheticSpec const& s) {
    return {{"seed", s.seed},
            {"innocent_accounts", s.innocent_accounts},
            {"comments_per_account", s.comments_per_account},
            {"mill_accounts", s.mill_accounts},
            {"mill_comments_per_account", s.mill_comments_per_account},
            {"mill_templates", s.mill_templates},
            {"mutation_rate", s.mutation_rate},
            {"weak_link_accounts", s.weak_link_accounts},
            {"typo_sentences", s.typo_sentences},
            {"typo_accounts_per_sentence", s.typo_accounts_per_sentence},
            {"recommending_authors", s.recommending_authors},
            {"recommended_mill_referees", s.recommended_mill_referees},
            {"innocent_recommendations", s.innocent_recommendations},
            {"innocent_duplicates", s.innocent_duplicates},
            {"noise_fraction", s.noise_fraction},
            {"start_month", s.start_month},
            {"months", s.months},
            {"peak_month", s.peak_month}};
}

struct InnocentDuplicate {
    std::string account;
    std::string account_b;  // set for a pair entry
    SuppressionCategory category = SuppressionCategory::other;
    std::string reason;
};

struct GroundTruth {
    std::set<std::string> mill_accounts;
    std::set<std::string> weak_link_accounts;
    std::set<std::string> innocent_accounts;  // every other referee with a retained comment
    std::set<std::pair<std::string, std::string>> guilty_pairs;
    std::vector<std::string> typo_sentences;  // normalized
    std::vector<InnocentDuplicate> innocent_duplicates;
    std::map<std::string, std::set<std::string>> recommenders;  // mill referee -> recommending authors
    std::string peak_month;

    [[nodiscard]] std::set<std::string> guilty_accounts() const {
        std::set<std::string> out = mill_accounts;
        out.insert(weak_link_accounts.begin(), weak_link_accounts.end());
        return out;
    }
    [[nodiscard]] bool empty() const { return mill_accounts.empty() && weak_link_accounts.empty() && guilty_pairs.empty(); }

    /// Suppression entries for the planted innocent duplication.
    [[nodiscard]] SuppressionList suppression() const {
        SuppressionList list;
        for (auto const& d : innocent_duplicates) {
            list.add(d.account, d.category, d.reason, d.account_b);
        }
        return list;
    }
};

inline nlohmann::json to_json(GroundTruth const& t) {
    auto dups = nlohmann::json::array();
    for (auto const& d : t.innocent_duplicates) {
        dups.push_back({{"account", d.account},
                        {"account_b", d.account_b},
                        {"category", to_string(d.category)},
                        {"reason", d.reason}});
    }
    auto pairs = nlohmann::json::array();
    for (auto const& [a, b] : t.guilty_pairs) {
        pairs.push_back({a, b});
    }
    nlohmann::json recs = nlohmann::json::object();
    for (auto const& [r, authors] : t.recommenders) {
        recs[r] = authors;
    }
    return {{"mill_accounts", t.mill_accounts},
            {"weak_link_accounts", t.weak_link_accounts},
            {"innocent_account_count", t.innocent_accounts.size()},
            {"guilty_pairs", pairs},
            {"typo_sentences", t.typo_sentences},
            {"innocent_duplicates", dups},
            {"recommenders", recs},
            {"peak_month", t.peak_month}};
}

namespace detail::phrases {

using List = std::vector<std::string_view>;

// Innocent reviewer language: a core clause with slots, optionally preceded
// by an opener and followed by one or two tails.

inline List const nouns{
    "sample size", "control group", "baseline model", "regression model", "effect size", "response rate",
    "error bars", "confidence intervals", "primary outcome", "secondary outcome", "exclusion criteria",
    "inclusion criteria", "follow-up period", "dose response", "calibration curve", "signal-to-noise ratio",
    "training set", "validation cohort", "test set", "loss function", "learning rate", "feature selection",
    "survey instrument", "interview protocol", "coding scheme", "inter-rater agreement", "missing data",
    "imputation strategy", "power calculation", "randomisation procedure", "blinding procedure", "placebo arm",
    "adverse events", "mortality rate", "hazard ratio", "odds ratio", "standard deviation", "median value",
    "time series", "spatial resolution", "temporal resolution", "sampling frequency", "detection limit",
    "reaction yield", "crystal structure", "band gap", "grain size", "surface area", "particle distribution",
    "thermal stability", "tensile strength", "elastic modulus", "fracture toughness", "corrosion rate",
    "cell viability", "gene expression", "protein level", "knockdown efficiency", "western blot",
    "flow cytometry gating", "antibody specificity", "mouse strain", "tissue section", "staining protocol",
    "microbial community", "soil moisture", "rainfall record", "temperature anomaly", "carbon flux",
    "land cover map", "field plots", "species richness", "population density", "migration route",
    "policy variable", "income measure", "household survey", "panel data", "instrumental variable",
    "fixed effects", "robustness check", "placebo test", "treatment effect", "spillover effect",
    "network topology", "node degree", "routing algorithm", "latency measurement", "throughput figure",
    "energy consumption", "battery lifetime", "charging protocol", "electrode material", "electrolyte choice",
    "simulation domain", "mesh resolution", "boundary conditions", "convergence criterion", "time step",
    "literature review", "theoretical framework", "conceptual model", "research question", "hypothesis two",
    "case selection", "archival sources", "coding reliability", "patient cohort", "referral pathway",
    "diagnostic threshold", "sensitivity estimate", "specificity estimate", "cost estimate", "discount rate",
    "questionnaire items", "factor loadings", "scale reliability", "item wording", "pilot study",
    "attrition rate", "recruitment strategy", "consent procedure", "ethics approval", "data availability",
    "code repository", "hyperparameter search", "ablation study", "benchmark dataset", "annotation guideline",
    "image preprocessing", "segmentation mask", "registration step", "noise model", "prior distribution",
    "posterior estimate", "Markov chain", "burn-in period", "trace plots", "effective sample size"};

inline List const adjectives{
    "reported", "adjusted", "unadjusted", "pooled", "stratified", "weighted", "normalised", "raw", "final",
    "preliminary", "observed", "predicted", "estimated", "simulated", "measured", "annual", "seasonal",
    "regional", "national", "local", "global", "baseline", "peak", "average", "cumulative", "marginal",
    "conditional", "relative", "absolute", "corrected", "uncorrected", "smoothed", "filtered", "unfiltered",
    "aggregated", "individual", "subgroup", "long-term", "short-term", "maximum", "minimum", "nominal",
    "effective", "apparent", "intrinsic", "external", "internal", "secondary", "primary", "optimised"};

inline List const methods{
    "cross-validation", "bootstrap resampling", "a mixed-effects model", "a random forest", "gradient boosting",
    "principal component analysis", "a Cox model", "logistic regression", "a Bayesian hierarchical model",
    "difference-in-differences", "propensity score matching", "thematic analysis", "grounded theory",
    "a finite element model", "molecular dynamics", "density functional theory", "X-ray diffraction",
    "scanning electron microscopy", "mass spectrometry", "quantitative PCR", "RNA sequencing",
    "a two-sample t-test", "a Mann-Whitney test", "an ANOVA", "a chi-squared test", "structural equation modelling",
    "a spatial autoregressive model", "kriging", "a Kalman filter", "wavelet analysis", "spectral analysis",
    "a convolutional network", "a transformer model", "k-means clustering", "hierarchical clustering",
    "a synthetic control", "regression discontinuity", "a meta-analysis", "a Delphi panel", "process tracing",
    "discourse analysis", "an agent-based model", "Monte Carlo simulation", "a particle filter",
    "linear programming", "a genetic algorithm", "a survival analysis", "multiple imputation",
    "a sensitivity analysis", "an interrupted time series"};

inline List const verbs{
    "measured", "estimated", "calculated", "selected", "defined", "validated", "calibrated", "normalised",
    "derived", "collected", "recorded", "coded", "filtered", "averaged", "sampled", "weighted", "reported",
    "modelled", "tested", "compared", "classified", "transformed", "adjusted", "matched", "stratified",
    "randomised", "imputed", "extracted", "annotated", "simulated", "benchmarked", "pre-registered"};

inline List const adverbs{
    "more carefully", "in more detail", "more explicitly", "more cautiously", "more precisely",
    "earlier in the text", "with a concrete example", "in a separate paragraph", "in the main text",
    "with appropriate references", "more transparently", "in plain language", "quantitatively",
    "with a short justification", "consistently throughout", "at first mention"};

inline List const sections{
    "the Introduction", "the Methods section", "the Results section", "the Discussion", "the Abstract",
    "the Conclusions", "the supplementary material", "the Limitations paragraph", "the Background section",
    "the Data section", "the appendix", "the cover letter", "the response to previous comments"};

inline List const openers{
    "Moreover, ", "In addition, ", "Importantly, ", "Minor point: ", "Relatedly, ", "Along the same lines, ",
    "More generally, ", "Separately, ", "Finally, ", "On a related note, ", "As a smaller issue, ",
    "Similarly, ", "In my view, ", "If possible, ", "For clarity, "};

// {N}, {N2}: noun; {A}: adjective; {M}: method; {V}, {V2}: verb; {D}: adverb;
// {S}: section; {F}: figure or table; {L}, {L2}: line numbers; {P}: count.
inline List const cores{
    "the authors should explain why the {N} was {V} using {M}",
    "the statement about the {A} {N} is not supported by {F}",
    "please report the {A} {N} for each level of the {N2}",
    "it is unclear how the {N} was {V}, and more detail on {M} would help",
    "the {A} {N} shown in {F} looks inconsistent with the {N2} described in {S}",
    "I would encourage the authors to compare the {N} against {M}",
    "the discussion of the {N} should acknowledge the limitations of {M}",
    "a sample of {P} seems too small to support conclusions about the {N}",
    "could the authors clarify whether the {N} was {V} before the {N2} was {V2}",
    "{F} would be easier to read if the {N} and the {N2} shared an axis",
    "the claim that the {N} drives the {N2} needs evidence beyond {M}",
    "lines {L} to {L2} repeat what {S} already says about the {N}",
    "the authors state that the {N} was {V} {D}, but {F} suggests otherwise",
    "a robustness check using {M} would strengthen the findings on the {N}",
    "the units of the {A} {N} are missing from {F}",
    "the {N} given in {S} differs from the value in {F}",
    "the choice of {M} for the {N} should be justified {D}",
    "it would help to include the {A} {N} as a covariate when fitting {M}",
    "the abbreviation for the {N} on line {L} is used before it is defined",
    "the link between the {N} and the {N2} deserves more attention in {S}",
    "the {N} is described {D}, yet the {N2} is barely mentioned",
    "how sensitive is the {A} {N} in {F} to the choice of {M}",
    "the behaviour of the {N} after {P} is interesting but needs an explanation",
    "I am not convinced that {M} suits a {A} {N} of this kind",
    "the conclusion drawn in {S} overstates what the {A} {N} can show",
    "the code used to derive the {N} from the {N2} should be shared",
    "the definition of the {N} on line {L} conflicts with the one in {S}",
    "the {N2} in {F} should be reported alongside the {A} {N}",
    "please discuss how the {N} would change if the {N2} were {V} differently",
    "the motivation for studying the {N} with {M} could be stated {D}",
    "the {A} {N} reported on line {L} seems implausible given the {N2}",
    "the paper would benefit from a comparison of the {N} with the {N2} using {M}",
    "I could not reproduce the {A} {N} from the numbers given in {F}",
    "the role of the {N} in the {N2} is only mentioned in passing in {S}",
    "the {N} and the {N2} appear to be confounded in the design of {F}"};

inline List const tails{
    ", especially for the {A} {N3}", " (see {F2})", ", as noted on line {L3}", " in {S2}",
    ", given the {A} {N3} reported earlier", ", at least for the {N3}", " when {M2} is used",
    ", which matters for the {N3}", ", since {P2} were excluded", " before the {N3} is {V3}",
    ", following the approach on line {L3}", ", in line with {M2}", ", particularly in {F2}",
    " for readers outside the field", ", as the reviewers of the first version also noted"};

inline List const stock_openers{
    "Thank you for the opportunity to review this manuscript.", "This is an interesting study.",
    "This is an interesting paper.", "The manuscript is well written."};

inline List const stock_closers{"I have no further comments.", "I recommend publication in its current form.",
                                "Please see the attached file."};

inline List const template_questions{
    "Is the research question clearly defined?", "Are the methods appropriate?",
    "Are the conclusions supported by the data?", "Is the manuscript clearly written?",
    "Does the paper fit the scope of the journal?"};

// Mill language: generic templated praise and requests with a vocabulary
// the innocent model never uses.

inline List const mill_subjects{
    "The holistic framing", "The overarching narrative", "The salient contribution", "The multifaceted paradigm",
    "The pivotal rationale", "The scholarly merit", "The conceptual scaffolding", "The methodological rigour",
    "The state-of-the-art landscape", "The theoretical underpinning", "The novelty aspect", "The practical implication"};

inline List const mill_predicates{
    "is paramount yet insufficiently elucidated", "warrants a more comprehensive elucidation",
    "should be meticulously delineated", "remains somewhat nebulous", "requires substantive augmentation",
    "deserves a more granular exposition", "ought to be juxtaposed with recent advancements",
    "must be articulated with greater perspicuity", "lacks an adequately robust substantiation",
    "needs to be contextualised within contemporary scholarship"};

inline List const mill_requests{
    "The authors are strongly advised to cite recent seminal works on {X}.",
    "The authors should meticulously polish the English language throughout the {Y}.",
    "It is recommended to append a dedicated paragraph elucidating {X}.",
    "The authors ought to expound upon the ramifications of {X} in the {Y}.",
    "Kindly furnish a flowchart summarising the {X} workflow.",
    "The reviewer opines that {X} merits an exhaustive juxtaposition with extant paradigms.",
    "The novelty of {X} should be underscored in the {Y}.",
    "Further elaboration on {X} would considerably enhance the {Y}.",
    "A comprehensive tabulation of {X} is indispensable for the {Y}.",
    "The authors must reconcile {X} with the aforementioned paradigms."};

inline List const mill_topics{
    "synergistic frameworks", "paradigm-shifting methodologies", "cutting-edge modalities",
    "multidimensional heuristics", "transdisciplinary ramifications", "holistic optimisation schemes",
    "overarching ontologies", "salient epistemologies", "robust scaffolding strategies",
    "nuanced operationalisations", "emergent typologies", "pivotal benchmarks"};

inline List const mill_places{"manuscript", "abstract", "introductory segment", "concluding segment",
                              "literature synopsis", "methodological exposition"};

inline List const mill_fillers{"also", "clearly", "further", "indeed", "notably", "certainly"};

inline List const typo_bank{
    "The novelity of this manuscrpt should be highlited in the abstarct.",
    "The authors are requsted to improove the discusion of the resuts.",
    "Recent refrences should be incuded to strenghten the litterature review.",
    "The methodolgy secton lacks sufficent detials for reproducibilty.",
    "The conclussion is not supprted by the experimantal findngs."};

inline std::string board_statement() {
    return "As a member of the editorial board I apply the same checklist to every submission I handle. "
           "The checklist covers ethics approval, data availability, statistical reporting and the clarity "
           "of the figures. Items marked as missing must be addressed before the manuscript can proceed.";
}

inline std::string practice_document() {
    return "This is a practice review written during reviewer training and does not concern a real "
           "submission. It demonstrates how to summarise a manuscript, list major concerns, list minor "
           "concerns and state a recommendation in a constructive tone.";
}

}  // namespace detail::phrases

namespace detail {

class PhraseModel {
public:
    explicit PhraseModel(std::mt19937_64& rng) : rng_(rng) {}

    std::string_view pick(phrases::List const& list) {
        return list[std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng_)];
    }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::string sentence() {
        std::string s;
        if (chance(0.35)) {
            s = pick(phrases::openers);
        }
        std::string core(pick(phrases::cores));
        if (chance(0.5) && core.find("{A} {N}") == std::string::npos) {
            replace(core, "the {N}", "the {A} {N}");
        }
        s += fill(core);
        s += fill(pick(phrases::tails));
        if (chance(0.4)) {
            s += fill(pick(phrases::tails));
        }
        bool const question = s.starts_with("could") || s.starts_with("how");
        for (char& c : s) {
            if (c != ' ') {
                c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                break;
            }
        }
        return s + (question ? "?" : ".");
    }

    /// At least `min_chars` characters and three sentences.
    std::vector<std::string> comment(std::size_t min_chars = 180) {
        std::vector<std::string> out;
        std::size_t chars = 0;
        if (chance(0.25)) {
            out.emplace_back(pick(phrases::stock_openers));
        }
        int const target = uniform(3, 8);
        while (static_cast<int>(out.size()) < target || chars < min_chars) {
            out.push_back(sentence());
            chars += out.back().size() + 1;
        }
        if (chance(0.1)) {
            out.emplace_back(pick(phrases::stock_closers));
        }
        return out;
    }

    std::string mill_sentence() {
        if (chance(0.5)) {
            return std::string(pick(phrases::mill_subjects)) + " of the " + std::string(pick(phrases::mill_topics)) +
                   " " + std::string(pick(phrases::mill_predicates)) + ".";
        }
        std::string s(pick(phrases::mill_requests));
        replace(s, "{X}", pick(phrases::mill_topics));
        replace(s, "{Y}", pick(phrases::mill_places));
        return s;
    }

    /// One light word-level edit.
    std::string mutate(std::string const& sentence) {
        std::vector<std::string> words;
        std::size_t start = 0;
        while (start < sentence.size()) {
            auto end = sentence.find(' ', start);
            if (end == std::string::npos) {
                end = sentence.size();
            }
            words.push_back(sentence.substr(start, end - start));
            start = end + 1;
        }
        if (words.size() < 4) {
            return sentence + " " + std::string(pick(phrases::mill_fillers));
        }
        std::string last = words.back();
        char const stop = last.back();
        last.pop_back();
        words.back() = last;
        auto const i = static_cast<std::size_t>(uniform(1, static_cast<int>(words.size()) - 2));
        switch (uniform(0, 3)) {
        case 0: words[i] = std::string(pick(phrases::mill_fillers)); break;
        case 1: words.erase(words.begin() + static_cast<std::ptrdiff_t>(i)); break;
        case 2: std::swap(words[i], words[i + 1]); break;
        default: words.insert(words.begin() + static_cast<std::ptrdiff_t>(i), std::string(pick(phrases::mill_fillers)));
        }
        std::string out;
        for (auto const& w : words) {
            out += (out.empty() ? "" : " ") + w;
        }
        return out + stop;
    }

private:
    static void replace(std::string& s, std::string_view key, std::string_view value) {
        for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
            s.replace(pos, key.size(), value);
        }
    }

    std::string figure() {
        switch (uniform(0, 3)) {
        case 0: return "Figure " + std::to_string(uniform(1, 9));
        case 1: return "Table " + std::to_string(uniform(1, 7));
        case 2: return "Supplementary Figure S" + std::to_string(uniform(1, 12));
        default: return "panel " + std::string(1, static_cast<char>('a' + uniform(0, 5))) + " of Figure " +
                        std::to_string(uniform(1, 9));
        }
    }

    std::string count() {
        static constexpr std::array<std::string_view, 8> units{"participants", "samples", "sites", "patients",
                                                               "weeks", "runs", "specimens", "households"};
        return std::to_string(uniform(6, 4000)) + " " + std::string(units[static_cast<std::size_t>(uniform(0, 7))]);
    }

    std::string fill(std::string_view pattern) {
        std::string s(pattern);
        replace(s, "{N2}", pick(phrases::nouns));
        replace(s, "{N3}", pick(phrases::nouns));
        replace(s, "{N}", pick(phrases::nouns));
        replace(s, "{A}", pick(phrases::adjectives));
        replace(s, "{M2}", pick(phrases::methods));
        replace(s, "{M}", pick(phrases::methods));
        replace(s, "{V2}", pick(phrases::verbs));
        replace(s, "{V3}", pick(phrases::verbs));
        replace(s, "{V}", pick(phrases::verbs));
        replace(s, "{D}", pick(phrases::adverbs));
        replace(s, "{S2}", pick(phrases::sections));
        replace(s, "{S}", pick(phrases::sections));
        replace(s, "{F2}", figure());
        replace(s, "{F}", figure());
        int const line = uniform(5, 900);
        replace(s, "{L2}", std::to_string(line + uniform(2, 30)));
        replace(s, "{L3}", std::to_string(uniform(5, 900)));
        replace(s, "{L}", std::to_string(line));
        replace(s, "{P2}", count());
        replace(s, "{P}", count());
        return s;
    }

    std::mt19937_64& rng_;
};

inline std::string join_sentences(std::vector<std::string> const& sentences) {
    std::string out;
    for (auto const& s : sentences) {
        out += (out.empty() ? "" : " ") + s;
    }
    return out;
}

/// Month `offset` months after `start` ("YYYY-MM").
inline Date month_at(std::string const& start, std::size_t offset, int day) {
    auto const d = Date::parse(start + "-01");
    if (!d) {
        throw std::invalid_argument("bad month " + start);
    }
    int const total = d->year * 12 + (d->month - 1) + static_cast<int>(offset);
    return {total / 12, total % 12 + 1, day};
}

inline std::size_t month_offset(std::string const& start, std::string const& month) {
    auto const a = Date::parse(start + "-01");
    auto const b = Date::parse(month + "-01");
    if (!a || !b) {
        throw std::invalid_argument("bad month");
    }
    int const diff = (b->year * 12 + b->month) - (a->year * 12 + a->month);
    if (diff < 0) {
        throw std::invalid_argument("peak month before start month");
    }
    return static_cast<std::size_t>(diff);
}

/// Splits `n` items over months in proportion to `weights`, largest
/// remainder first.
inline std::vector<std::size_t> allocate(std::size_t n, std::vector<double> const& weights) {
    double const total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rest;
    std::size_t used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double const exact = static_cast<double>(n) * weights[i] / total;
        out[i] = static_cast<std::size_t>(exact);
        used += out[i];
        rest.emplace_back(exact - static_cast<double>(out[i]), i);
    }
    std::stable_sort(rest.begin(), rest.end(), [](auto const& x, auto const& y) { return x.first > y.first; });
    for (std::size_t k = 0; used < n; ++k, ++used) {
        ++out[rest[k % rest.size()].second];
    }
    return out;
}

}  // namespace detail

inline nlohmann::json to_json(RawRow const& row) {
    if (row.article) {
        auto const& a = *row.article;
        auto recs = nlohmann::json::array();
        for (auto const& [author, referee] : a.recommended) {
            recs.push_back({{"author", author}, {"referee", referee}});
        }
        return {{"type", "article"},
                {"article_id", a.article_id},
                {"lead_author", a.lead_author},
                {"co_authors", a.co_authors},
                {"recommended_referees", recs}};
    }
    auto const& c = *row.comment;
    return {{"comment_id", c.comment_id},     {"article_id", c.article_id}, {"referee", c.referee},
            {"journal_id", c.journal_id},     {"audience", c.audience},     {"round", c.round},
            {"recommendation", c.recommendation}, {"submitted_at", c.submitted_at}, {"text", c.text}};
}

inline void write_jsonl(std::vector<RawRow> const& rows, std::ostream& out) {
    for (auto const& r : rows) {
        out << to_json(r).dump() << '\n';
    }
}

struct SyntheticCorpus {
    std::vector<RawRow> rows;  // articles first, then comments including filtered noise
    Corpus corpus;
    std::vector<ExcludedRow> excluded;
    GroundTruth truth;
};

inline constexpr std::size_t synthetic_journals = 30;
inline constexpr std::size_t synthetic_template_journals = 4;

inline std::set<std::string> synthetic_blocklist() {
    std::set<std::string> out;
    for (std::size_t j = synthetic_journals - synthetic_template_journals + 1; j <= synthetic_journals; ++j) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "j%02zu", j);
        out.insert(buf);
    }
    return out;
}

inline SyntheticCorpus generate_synthetic(SyntheticSpec const& spec) {
    spec.validate();
    namespace ph = detail::phrases;
    std::mt19937_64 rng(spec.seed);
    detail::PhraseModel model(rng);
    SyntheticCorpus out;
    GroundTruth& truth = out.truth;
    truth.peak_month = spec.peak_month;

    // Account pool: distinct uids in random order.
    std::size_t const planted = spec.innocent_duplicates ? 6 : 0;
    std::size_t const referees = spec.innocent_accounts + spec.mill_accounts + spec.weak_link_accounts + planted;
    std::size_t const authors_only = referees / 2 + spec.recommending_authors + 40;
    std::vector<std::uint32_t> numbers(referees + authors_only);
    {
        std::set<std::uint32_t> taken;
        if (numbers.size() > 80000) {
            throw std::invalid_argument("too many accounts for five-digit uids");
        }
        std::uniform_int_distribution<std::uint32_t> pick(10000, 99999);
        for (auto& n : numbers) {
            do {
                n = pick(rng);
            } while (!taken.insert(n).second);
        }
    }
    auto uid_of = [&numbers](std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "uid%05u", numbers[i]);
        return std::string(buf);
    };
    std::size_t next = 0;
    auto take = [&](std::size_t n) {
        std::vector<std::string> v;
        for (std::size_t i = 0; i < n; ++i) {
            v.push_back(uid_of(next++));
        }
        return v;
    };
    auto const innocent = take(spec.innocent_accounts);
    auto const mill = take(spec.mill_accounts);
    auto const weak = take(spec.weak_link_accounts);
    auto const special = take(planted);
    auto const pure_authors = take(authors_only);

    std::size_t const journal_count = synthetic_journals - synthetic_template_journals;
    auto journal = [&](std::size_t j) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "j%02zu", j % journal_count + 1);
        return std::string(buf);
    };
    auto const blocklist = synthetic_blocklist();

    struct Draft {
        std::string referee;
        std::string text;
        bool mill = false;
        std::string article;
        Date date;
        std::string audience = "to_authors";
        int round = 1;
        std::string recommendation;
        std::string journal;
    };
    std::vector<Draft> drafts;

    // Innocent comments; each account has at least one.
    std::vector<std::size_t> per_account(innocent.size(), innocent.empty() ? 0 : 1);
    if (!innocent.empty()) {
        auto const total = static_cast<std::size_t>(std::llround(spec.comments_per_account *
                                                                 static_cast<double>(innocent.size())));
        std::lognormal_distribution<double> activity(0.0, 0.8);
        std::vector<double> w(innocent.size());
        for (auto& x : w) {
            x = activity(rng);
        }
        std::discrete_distribution<std::size_t> who(w.begin(), w.end());
        for (std::size_t k = innocent.size(); k < total; ++k) {
            ++per_account[who(rng)];
        }
    }
    for (std::size_t a = 0; a < innocent.size(); ++a) {
        for (std::size_t k = 0; k < per_account[a]; ++k) {
            drafts.push_back({innocent[a], detail::join_sentences(model.comment())});
        }
    }

    // Mill templates and comments.
    std::vector<std::vector<std::string>> templates;
    for (std::size_t t = 0; t < spec.mill_templates && !mill.empty(); ++t) {
        std::vector<std::string> tpl;
        std::set<std::string> seen;
        while (tpl.size() < 8) {
            auto s = model.mill_sentence();
            if (seen.insert(s).second) {
                tpl.push_back(std::move(s));
            }
        }
        templates.push_back(std::move(tpl));
    }
    std::map<std::string, std::set<std::size_t>> templates_of;
    std::vector<std::size_t> mill_draft_index;
    std::size_t const first_spread = std::max<std::size_t>(1, std::min(templates.size(), mill.size() / 2));
    for (std::size_t a = 0; a < mill.size(); ++a) {
        for (std::size_t k = 0; k < spec.mill_comments_per_account; ++k) {
            std::size_t const t = k == 0 ? a % first_spread
                                         : std::uniform_int_distribution<std::size_t>(0, templates.size() - 1)(rng);
            templates_of[mill[a]].insert(t);
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < templates[t].size(); ++s) {
                bool const keep = k == 0 && s == 0;
                sentences.push_back(!keep && model.chance(spec.mutation_rate) ? model.mutate(templates[t][s])
                                                                               : templates[t][s]);
            }
            if (model.chance(0.4)) {
                auto const at = static_cast<std::size_t>(model.uniform(1, static_cast<int>(sentences.size())));
                sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at), model.mill_sentence());
            }
            mill_draft_index.push_back(drafts.size());
            drafts.push_back({mill[a], detail::join_sentences(sentences), true});
        }
        truth.mill_accounts.insert(mill[a]);
    }
    for (std::size_t a = 0; a < mill.size(); ++a) {
        for (std::size_t b = a + 1; b < mill.size(); ++b) {
            truth.guilty_pairs.insert(std::minmax(mill[a], mill[b]));
        }
    }

    // Weak links: ordinary reviewers who paste a little mill text once.
    std::map<std::string, std::size_t> weak_linked_draft;
    for (auto const& w : weak) {
        for (int k = 0; k < 3; ++k) {
            drafts.push_back({w, detail::join_sentences(model.comment())});
        }
        if (templates.empty()) {
            continue;
        }
        auto const t = std::uniform_int_distribution<std::size_t>(0, templates.size() - 1)(rng);
        auto sentences = model.comment();
        sentences.insert(sentences.begin() + 1, templates[t][0]);
        sentences.push_back(templates[t][1 + static_cast<std::size_t>(model.uniform(0, 6))]);
        weak_linked_draft[w] = drafts.size();
        drafts.push_back({w, detail::join_sentences(sentences)});
        truth.weak_link_accounts.insert(w);
        for (auto const& [m, ts] : templates_of) {
            if (ts.contains(t)) {
                truth.guilty_pairs.insert(std::minmax(w, m));
            }
        }
    }

    // Typo sentences shared by a few guilty accounts.
    if (!mill.empty()) {
        if (spec.typo_sentences > ph::typo_bank.size()) {
            throw std::invalid_argument("at most " + std::to_string(ph::typo_bank.size()) + " typo sentences");
        }
        std::vector<std::string> carriers(mill.begin(), mill.end());
        carriers.insert(carriers.end(), weak.begin(), weak.end());
        for (std::size_t s = 0; s < spec.typo_sentences; ++s) {
            std::string const typo(ph::typo_bank[s]);
            truth.typo_sentences.push_back(normalize_text(typo));
            std::vector<std::string> chosen;
            if (!weak.empty()) {
                chosen.push_back(weak[s % weak.size()]);
            }
            std::vector<std::string> pool(mill.begin(), mill.end());
            std::shuffle(pool.begin(), pool.end(), rng);
            for (auto const& m : pool) {
                if (chosen.size() >= spec.typo_accounts_per_sentence) {
                    break;
                }
                chosen.push_back(m);
            }
            for (auto const& uid : chosen) {
                auto it = std::find_if(drafts.begin(), drafts.end(), [&](Draft const& d) {
                    return d.referee == uid && (d.mill || weak_linked_draft.contains(uid));
                });
                if (weak_linked_draft.contains(uid)) {
                    it = drafts.begin() + static_cast<std::ptrdiff_t>(weak_linked_draft[uid]);
                }
                it->text += " " + typo;
            }
        }
    }

    // Innocent duplication: board members, practice documents, one person
    // with two accounts.
    if (spec.innocent_duplicates) {
        auto const board = ph::board_statement();
        auto const practice = ph::practice_document();
        for (int i = 0; i < 2; ++i) {
            drafts.push_back({special[static_cast<std::size_t>(i)], board});
            drafts.push_back({special[static_cast<std::size_t>(i)], detail::join_sentences(model.comment())});
            drafts.push_back({special[static_cast<std::size_t>(2 + i)], practice});
        }
        auto const shared = detail::join_sentences(model.comment(300));
        drafts.push_back({special[4], shared});
        drafts.push_back({special[4], detail::join_sentences(model.comment())});
        drafts.push_back({special[5], shared});
        truth.innocent_duplicates.push_back(
            {special[0], {}, SuppressionCategory::board_member, "editorial board checklist"});
        truth.innocent_duplicates.push_back(
            {special[1], {}, SuppressionCategory::board_member, "editorial board checklist"});
        truth.innocent_duplicates.push_back(
            {special[2], {}, SuppressionCategory::practice_document, "reviewer training document"});
        truth.innocent_duplicates.push_back(
            {special[3], {}, SuppressionCategory::practice_document, "reviewer training document"});
        truth.innocent_duplicates.push_back(
            {std::min(special[4], special[5]), std::max(special[4], special[5]),
             SuppressionCategory::duplicate_account, "one reviewer registered twice"});
    }

    // Dates: innocent comments spread evenly, mill comments peaked.
    std::vector<std::size_t> innocent_idx;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        if (!drafts[i].mill) {
            innocent_idx.push_back(i);
        }
    }
    std::shuffle(innocent_idx.begin(), innocent_idx.end(), rng);
    for (std::size_t k = 0; k < innocent_idx.size(); ++k) {
        drafts[innocent_idx[k]].date = detail::month_at(spec.start_month, k % spec.months, model.uniform(1, 28));
    }
    if (!mill_draft_index.empty()) {
        auto const peak = detail::month_offset(spec.start_month, spec.peak_month);
        std::vector<double> weights(spec.months, 0.0);
        for (std::size_t m = 0; m < spec.months; ++m) {
            auto const d = static_cast<double>(m) - static_cast<double>(peak);
            weights[m] = d < -3 ? 0.0 : d <= 0 ? std::pow(0.5, -d) : std::pow(0.75, d);
        }
        auto const counts = detail::allocate(mill_draft_index.size(), weights);
        std::vector<std::size_t> order(mill_draft_index);
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t k = 0;
        for (std::size_t m = 0; m < spec.months; ++m) {
            for (std::size_t c = 0; c < counts[m]; ++c) {
                drafts[order[k++]].date = detail::month_at(spec.start_month, m, model.uniform(1, 28));
            }
        }
    }

    // Articles, authorship and recommendations.
    std::vector<RawArticle> articles;
    auto author_from_pool = [&]() -> std::string {
        if (!innocent.empty() && model.chance(0.3)) {
            return innocent[static_cast<std::size_t>(model.uniform(0, static_cast<int>(innocent.size()) - 1))];
        }
        return pure_authors[static_cast<std::size_t>(
            model.uniform(static_cast<int>(spec.recommending_authors), static_cast<int>(pure_authors.size()) - 1))];
    };
    std::size_t const innocent_articles = std::max<std::size_t>(1, innocent_idx.size() * 2 / 5);
    for (std::size_t a = 0; a < innocent_articles; ++a) {
        RawArticle art;
        art.article_id = "art" + std::to_string(100000 + a);
        art.lead_author = author_from_pool();
        for (int c = 0, n = model.uniform(0, 4); c < n; ++c) {
            auto co = author_from_pool();
            if (co != art.lead_author) {
                art.co_authors.push_back(std::move(co));
            }
        }
        articles.push_back(std::move(art));
    }
    std::size_t const mill_articles = std::max<std::size_t>(spec.recommending_authors, mill.size() * 3 / 2);
    std::vector<std::size_t> mill_article_ids;
    for (std::size_t a = 0; a < mill_articles && !mill.empty(); ++a) {
        RawArticle art;
        art.article_id = "art" + std::to_string(500000 + a);
        art.lead_author = a < spec.recommending_authors
                              ? pure_authors[a]
                              : pure_authors[pure_authors.size() - 1 - a % 40];
        if (a % 4 == 0) {
            art.co_authors.push_back(mill[a % mill.size()]);
        }
        if (a < spec.recommending_authors) {
            for (std::size_t r = 0; r < spec.recommended_mill_referees; ++r) {
                art.recommended.emplace_back(art.lead_author, mill[r]);
                truth.recommenders[mill[r]].insert(art.lead_author);
            }
        }
        mill_article_ids.push_back(articles.size());
        articles.push_back(std::move(art));
    }
    std::set<std::string> const protected_referees(mill.begin(), mill.end());
    for (std::size_t r = 0; r < spec.innocent_recommendations && innocent.size() > 1; ++r) {
        auto& art = articles[static_cast<std::size_t>(model.uniform(0, static_cast<int>(innocent_articles) - 1))];
        auto const& referee =
            innocent[static_cast<std::size_t>(model.uniform(0, static_cast<int>(innocent.size()) - 1))];
        if (referee != art.lead_author) {
            art.recommended.emplace_back(art.lead_author, referee);
        }
    }
    for (auto& d : drafts) {
        if (d.mill && model.chance(0.75)) {
            d.article = articles[mill_article_ids[static_cast<std::size_t>(
                                     model.uniform(0, static_cast<int>(mill_article_ids.size()) - 1))]]
                            .article_id;
        } else {
            d.article = articles[static_cast<std::size_t>(model.uniform(0, static_cast<int>(innocent_articles) - 1))]
                            .article_id;
        }
        d.journal = journal(static_cast<std::size_t>(model.uniform(0, static_cast<int>(journal_count) - 1)));
        if (!d.mill && model.chance(0.15)) {
            d.audience = "to_editors";
        }
        static constexpr std::array<std::string_view, 4> recs{"accept", "minor", "major", "other"};
        d.recommendation = recs[static_cast<std::size_t>(model.uniform(0, 3))];
    }

    // Noise rows that ingestion removes.
    auto const noise = static_cast<std::size_t>(spec.noise_fraction * static_cast<double>(drafts.size()));
    std::vector<Draft> noise_rows;
    for (std::size_t k = 0; k < noise && !innocent.empty(); ++k) {
        Draft d = drafts[static_cast<std::size_t>(model.uniform(0, static_cast<int>(drafts.size()) - 1))];
        d.mill = false;
        switch (k % 4) {
        case 0:
            d.round = 2;
            d.text = "The authors have addressed all my comments. " + detail::join_sentences(model.comment());
            break;
        case 1:
            d.recommendation = "reject";
            d.text = detail::join_sentences(model.comment());
            break;
        case 2: d.text = "Accept as is. Fine work."; break;
        default: {
            std::vector<std::string> qs;
            for (auto q : ph::template_questions) {
                qs.emplace_back(q);
                qs.push_back(model.chance(0.5) ? "Yes." : model.sentence());
            }
            d.text = detail::join_sentences(qs);
            auto it = blocklist.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(k % blocklist.size()));
            d.journal = *it;
        }
        }
        noise_rows.push_back(std::move(d));
    }

    // Comment ids follow a shuffled order so planted rows are interleaved.
    std::vector<Draft> all(std::make_move_iterator(drafts.begin()), std::make_move_iterator(drafts.end()));
    all.insert(all.end(), std::make_move_iterator(noise_rows.begin()), std::make_move_iterator(noise_rows.end()));
    std::shuffle(all.begin(), all.end(), rng);

    std::size_t line = 0;
    for (auto const& a : articles) {
        RawRow row;
        row.line = ++line;
        row.article = a;
        out.rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto const& d = all[i];
        RawComment c;
        char id[24];
        std::snprintf(id, sizeof id, "c%07zu", i + 1);
        c.comment_id = id;
        c.article_id = d.article;
        c.referee = d.referee;
        c.journal_id = d.journal;
        c.audience = d.audience;
        c.round = d.round;
        c.recommendation = d.recommendation;
        c.submitted_at = d.date.str();
        c.text = d.text;
        RawRow row;
        row.line = ++line;
        row.comment = std::move(c);
        out.rows.push_back(std::move(row));
    }

    IngestConfig config;
    config.journal_blocklist = blocklist;
    auto ingested = ingest(out.rows, config);
    out.corpus = std::move(ingested.corpus);
    out.excluded = std::move(ingested.excluded);

    auto const guilty = truth.guilty_accounts();
    std::set<std::string> planted_innocent;
    for (auto const& d : truth.innocent_duplicates) {
        planted_innocent.insert(d.account);
        if (!d.account_b.empty()) {
            planted_innocent.insert(d.account_b);
        }
    }
    for (auto const& c : out.corpus.comments()) {
        if (!guilty.contains(c.referee_uid) && !planted_innocent.contains(c.referee_uid)) {
            truth.innocent_accounts.insert(c.referee_uid);
        }
    }
    return out;
}

/// Every mill account shares at least one verbatim sentence with another
/// mill account.
inline bool mill_sentences_shared(Corpus const& corpus, GroundTruth const& truth) {
    std::map<std::string, std::set<std::string>> users;
    for (auto const& c : corpus.comments()) {
        if (truth.mill_accounts.contains(c.referee_uid)) {
            for (auto const& s : c.sentences) {
                users[s].insert(c.referee_uid);
            }
        }
    }
    std::set<std::string> linked;
    for (auto const& [s, u] : users) {
        if (u.size() >= 2) {
            linked.insert(u.begin(), u.end());
        }
    }
    return linked == truth.mill_accounts || truth.mill_accounts.size() < 2;
}

}  // namespace dupforge
