#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgqa/errors.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/prompts.hpp"
#include "dgqa/stats.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

// ---------------------------------------------------------------------------
// Human-evaluation labels
// ---------------------------------------------------------------------------

/// Response-quality labels, ordered by severity: index 0 is the worst
/// possible outcome and the two non-error labels sit at the end.
enum class EvalLabel {
    Hallucination = 0,
    NonAnswer,
    PartialAnswer,
    IdkBad,
    Disfluent,
    Other,
    IdkGood,
    Good,
};

inline const std::array<std::string, 8>& eval_label_names() {
    static const std::array<std::string, 8> kNames = {
        "Hallucination", "Non-Answer", "Partial answer", "IDK-Bad",
        "Disfluent",     "Other",      "IDK-Good",       "Good"};
    return kNames;
}

inline std::string to_string(EvalLabel l) {
    return eval_label_names()[static_cast<std::size_t>(l)];
}

inline bool is_error_label(EvalLabel l) {
    return l != EvalLabel::Good && l != EvalLabel::IdkGood;
}

/// Parse a label leniently: case, spacing, and hyphenation are
/// annotator formatting, not signal ("IDK - Bad" == "IDK-Bad").
inline EvalLabel eval_label_from_string(const std::string& s) {
    std::string key;
    for (const char c : s)
        if (std::isalnum(static_cast<unsigned char>(c)))
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::size_t i = 0; i < eval_label_names().size(); ++i) {
        std::string want;
        for (const char c : eval_label_names()[i])
            if (std::isalnum(static_cast<unsigned char>(c)))
                want += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (key == want) return static_cast<EvalLabel>(i);
    }
    throw ParseError("unknown evaluation label", s);
}

struct AggregationResult {
    EvalLabel final_label = EvalLabel::Good;
    std::string rule;  // "majority" or "severity"
    std::array<EvalLabel, 3> votes{};
};

/// Reduce three annotator votes to one label: majority when one exists,
/// otherwise the most severe error present. Three-way disagreements
/// always contain an error label (there are only two non-error labels),
/// so the fallback is total.
inline AggregationResult aggregate_labels(const std::array<EvalLabel, 3>& votes) {
    AggregationResult out;
    out.votes = votes;
    for (const auto v : votes) {
        int same = 0;
        for (const auto w : votes)
            if (w == v) ++same;
        if (same >= 2) {
            out.final_label = v;
            out.rule = "majority";
            return out;
        }
    }
    out.rule = "severity";
    out.final_label = *std::min_element(votes.begin(), votes.end());
    return out;
}

struct AgreementStats {
    double three_way_pct = 0.0;  // all three annotators agree
    double two_way_pct = 0.0;    // at least two agree
    double alpha = 0.0;          // chance-corrected nominal agreement
};

inline AgreementStats agreement_stats(
    const std::vector<std::array<EvalLabel, 3>>& items) {
    if (items.empty()) throw ValidationError("no annotated items");
    std::size_t three = 0, two = 0;
    std::vector<std::vector<std::string>> raw;
    raw.reserve(items.size());
    for (const auto& votes : items) {
        const bool all = votes[0] == votes[1] && votes[1] == votes[2];
        const bool any2 =
            votes[0] == votes[1] || votes[1] == votes[2] || votes[0] == votes[2];
        three += all ? 1 : 0;
        two += any2 ? 1 : 0;
        raw.push_back({to_string(votes[0]), to_string(votes[1]), to_string(votes[2])});
    }
    const double n = static_cast<double>(items.size());
    return {100.0 * static_cast<double>(three) / n, 100.0 * static_cast<double>(two) / n,
            krippendorff_alpha(raw)};
}

// ---------------------------------------------------------------------------
// Factual-consistency scoring
// ---------------------------------------------------------------------------

/// Split a model response into numbered atomic facts. The whole
/// response is decomposed in one shot — no sentence pre-splitting — so
/// list items and headers end up inside facts instead of producing
/// fragments like "Select [HOME]." scored in isolation.
inline std::vector<std::string> extract_atomic_facts(Gateway& gateway,
                                                     const std::string& model_id,
                                                     const std::string& response,
                                                     Decoding decoding = {}) {
    const std::string raw =
        gateway.complete(prompts::fact_extraction(model_id, response, decoding));
    std::vector<std::string> facts;
    for (const auto& line : split_lines(raw)) {
        auto text = trim(line);
        if (text.empty()) continue;
        std::size_t i = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i > 0 && i < text.size() && (text[i] == '.' || text[i] == ')')) {
            text = trim(text.substr(i + 1));
        } else if (!text.empty() && (text[0] == '-' || text[0] == '*')) {
            text = trim(text.substr(1));
        } else if (!facts.empty()) {
            // Continuation of the previous fact wrapped onto a new line.
            facts.back() += " " + std::string(text);
            continue;
        }
        if (!text.empty()) facts.emplace_back(text);
    }
    if (facts.empty())
        throw QualityError("fact extraction produced no facts from response: " + response);
    return facts;
}

/// True/False verification of one fact against one passage. A reply
/// that is neither is reported as unjudgeable rather than guessed.
inline std::optional<bool> judge_fact(Gateway& gateway, const std::string& model_id,
                                      const std::string& fact,
                                      const std::string& passage_body,
                                      Decoding decoding = {}) {
    const std::string raw =
        gateway.complete(prompts::fact_judgment(model_id, fact, passage_body, decoding));
    const std::string flat = normalize_loose(raw);
    if (flat.rfind("true", 0) == 0) return true;
    if (flat.rfind("false", 0) == 0) return false;
    return std::nullopt;
}

struct FactScoreResult {
    bool refusal = false;        // response declined to answer; not scored
    double score = 0.0;          // supported / judged, when scored
    std::size_t total_facts = 0;
    std::size_t supported = 0;
    std::size_t unjudgeable = 0;
};

/// Score one response against its passage: extract atomic facts, verify
/// each, and report the supported fraction. Refusal-style responses are
/// flagged and skipped when detection is on — scoring "I can't find
/// that" as a pile of false facts would punish exactly the behavior the
/// training data is trying to teach.
inline FactScoreResult factscore(Gateway& gateway, const std::string& model_id,
                                 const std::string& response,
                                 const std::string& passage_body,
                                 bool detect_refusals = true,
                                 const std::vector<std::string>& refusal_patterns =
                                     default_refusal_patterns(),
                                 Decoding decoding = {}) {
    FactScoreResult out;
    if (detect_refusals && is_refusal(response, refusal_patterns)) {
        out.refusal = true;
        return out;
    }
    const auto facts = extract_atomic_facts(gateway, model_id, response, decoding);
    out.total_facts = facts.size();
    for (const auto& fact : facts) {
        const auto verdict = judge_fact(gateway, model_id, fact, passage_body, decoding);
        if (!verdict) {
            ++out.unjudgeable;
            continue;
        }
        if (*verdict) ++out.supported;
    }
    const std::size_t judged = out.total_facts - out.unjudgeable;
    if (judged == 0)
        throw QualityError("no judgeable facts in response: " + response);
    out.score = static_cast<double>(out.supported) / static_cast<double>(judged);
    return out;
}

struct CorpusFactScore {
    double mean_score = 0.0;   // over scored responses only
    std::size_t scored = 0;
    std::size_t refusals = 0;  // excluded from the mean
    std::size_t failures = 0;  // extraction/judging broke; excluded and counted
};

/// Aggregate FactScore over (response, passage) pairs. Refusals and
/// per-item failures are excluded from the mean and surfaced as counts.
inline CorpusFactScore factscore_corpus(
    Gateway& gateway, const std::string& model_id,
    const std::vector<std::pair<std::string, std::string>>& response_passage_pairs,
    bool detect_refusals = true,
    const std::vector<std::string>& refusal_patterns = default_refusal_patterns(),
    Decoding decoding = {}) {
    if (response_passage_pairs.empty())
        throw ValidationError("no responses to score");
    CorpusFactScore out;
    double sum = 0.0;
    for (const auto& [response, passage] : response_passage_pairs) {
        try {
            const auto r = factscore(gateway, model_id, response, passage,
                                     detect_refusals, refusal_patterns, decoding);
            if (r.refusal) {
                ++out.refusals;
                continue;
            }
            sum += r.score;
            ++out.scored;
        } catch (const Error&) {
            ++out.failures;
        }
    }
    if (out.scored > 0) out.mean_score = sum / static_cast<double>(out.scored);
    return out;
}

// ---------------------------------------------------------------------------
// Question-diversity metrics
// ---------------------------------------------------------------------------

/// Unique n-grams across the whole corpus divided by total tokens.
inline double distinct_n(const std::vector<std::string>& texts, int n,
                         const Tokenizer& tokenizer = whitespace_tokenizer()) {
    if (n < 1 || n > 3)
        throw ValidationError("distinct-n is defined here for n in {1,2,3}, got " +
                              std::to_string(n));
    if (texts.empty()) throw ValidationError("distinct-n of an empty corpus");
    std::set<std::string> grams;
    std::size_t total_tokens = 0;
    for (const auto& text : texts) {
        const auto toks = tokenizer.run(text);
        total_tokens += toks.size();
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
            std::string g;
            for (int k = 0; k < n; ++k) g += (k ? "\x1f" : "") + toks[i + k];
            grams.insert(std::move(g));
        }
    }
    if (total_tokens == 0) throw ValidationError("distinct-n over zero tokens");
    return static_cast<double>(grams.size()) / static_cast<double>(total_tokens);
}

inline double mean_token_length(const std::vector<std::string>& texts,
                                const Tokenizer& tokenizer = whitespace_tokenizer()) {
    if (texts.empty()) throw ValidationError("mean length of an empty corpus");
    std::size_t total = 0;
    for (const auto& t : texts) total += tokenizer.run(t).size();
    return static_cast<double>(total) / static_cast<double>(texts.size());
}

/// Mean unconditional perplexity of the texts under a scoring model
/// (empty context; lower = more stereotyped).
inline double mean_perplexity(Gateway& gateway, const std::string& model_id,
                              const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("mean perplexity of an empty corpus");
    double sum = 0.0;
    for (const auto& t : texts) {
        const auto tokens = gateway.token_logprobs({model_id, "", t});
        if (tokens.empty())
            throw ValidationError("scorer returned zero tokens for text: " + t);
        double lp = 0.0;
        for (const auto& tok : tokens) lp += tok.logprob;
        sum += std::exp(-lp / static_cast<double>(tokens.size()));
    }
    return sum / static_cast<double>(texts.size());
}

namespace detail {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Greedy token-matching F-measure between two token-embedding
/// sequences: precision matches each token of `a` to its best
/// counterpart in `b`, recall the reverse, F harmonically combines.
inline double greedy_match_f(const std::vector<std::vector<double>>& a,
                             const std::vector<std::vector<double>>& b) {
    if (a.empty() || b.empty())
        throw ValidationError("similarity of a text with no tokens");
    auto directional = [](const std::vector<std::vector<double>>& from,
                          const std::vector<std::vector<double>>& to) {
        double sum = 0.0;
        for (const auto& f : from) {
            double best = -1.0;
            for (const auto& t : to) best = std::max(best, cosine(f, t));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    const double p = directional(a, b);
    const double r = directional(b, a);
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

}  // namespace detail

/// Mean pairwise similarity over all unordered text pairs (higher =
/// more repetitive question set). Token embeddings come from the
/// gateway so caching and replay apply.
inline double mean_pairwise_similarity(Gateway& gateway, const std::string& embed_model,
                                       const std::vector<std::string>& texts) {
    if (texts.size() < 2)
        throw ValidationError("pairwise similarity needs at least two texts");
    std::vector<std::vector<std::vector<double>>> embedded;
    embedded.reserve(texts.size());
    for (const auto& t : texts) embedded.push_back(gateway.embed_tokens({embed_model, t}));

    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < embedded.size(); ++i)
        for (std::size_t j = i + 1; j < embedded.size(); ++j) {
            sum += detail::greedy_match_f(embedded[i], embedded[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

struct DiversityReport {
    double distinct_1 = 0.0;
    double distinct_2 = 0.0;
    double distinct_3 = 0.0;
    double mean_length = 0.0;
    double mean_perplexity = 0.0;
    double mean_similarity = 0.0;
};

inline Json to_json(const DiversityReport& r) {
    return Json{{"distinct_1", r.distinct_1},   {"distinct_2", r.distinct_2},
                {"distinct_3", r.distinct_3},   {"mean_length", r.mean_length},
                {"mean_perplexity", r.mean_perplexity},
                {"mean_similarity", r.mean_similarity}};
}

}  // namespace dgqa
