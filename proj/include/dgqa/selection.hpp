#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dgqa/corpus.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/io.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/qa.hpp"

namespace dgqa {

// ---------------------------------------------------------------------------
// Conditional perplexity of a QA pair given its passage
// ---------------------------------------------------------------------------

/// Template used to condition the pair on its passage. The context/
/// continuation split is at a fixed byte boundary so echo-logprob
/// providers can slice tokens consistently.
inline constexpr const char* kScoreTemplateVersion = "score-v1";

inline std::string score_context(const std::string& passage_body) {
    return "Passage:\n" + passage_body + "\n\n";
}

inline std::string score_continuation(const std::string& question,
                                      const std::string& answer) {
    return "Question: " + question + "\nAnswer: " + answer;
}

/// PP(q,a | c) = exp(-mean token logprob of the joint question+answer
/// continuation given the passage context).
inline double conditional_perplexity(Gateway& gateway, const std::string& model_id,
                                     const std::string& passage_body,
                                     const std::string& question,
                                     const std::string& answer) {
    ScoreRequest req{model_id, score_context(passage_body),
                     score_continuation(question, answer)};
    const auto tokens = gateway.token_logprobs(req);
    if (tokens.empty())
        throw ValidationError("scorer returned zero tokens for the continuation");
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!std::isfinite(tokens[i].logprob))
            throw ValidationError("non-finite logprob at continuation token " +
                                  std::to_string(i) + " ('" + tokens[i].token + "')");
        sum += tokens[i].logprob;
    }
    return std::exp(-sum / static_cast<double>(tokens.size()));
}

// ---------------------------------------------------------------------------
// Per-passage perplexity records and the blend rule
// ---------------------------------------------------------------------------

/// One passage with a candidate pair from each generator and both
/// conditional perplexities. delta_pp < 0 means the G pair sits in a
/// lower-perplexity (more familiar) region for the scored model.
struct PerplexityRecord {
    SectionPath passage_path;
    QAPair pair_G;  // distilled from the stronger external model
    QAPair pair_L;  // self-generated by the model being trained
    double pp_G = 0.0;
    double pp_L = 0.0;
    double delta_pp = 0.0;  // pp_G - pp_L
};

inline double delta_perplexity(double pp_G, double pp_L) { return pp_G - pp_L; }

inline PerplexityRecord score_record(Gateway& scorer, const std::string& scorer_model,
                                     const ManualSection& passage, QAPair pair_G,
                                     QAPair pair_L) {
    PerplexityRecord rec;
    rec.passage_path = passage.path;
    rec.pair_G = std::move(pair_G);
    rec.pair_L = std::move(pair_L);
    rec.pp_G = conditional_perplexity(scorer, scorer_model, passage.body,
                                      rec.pair_G.question, rec.pair_G.answer);
    rec.pp_L = conditional_perplexity(scorer, scorer_model, passage.body,
                                      rec.pair_L.question, rec.pair_L.answer);
    rec.delta_pp = delta_perplexity(rec.pp_G, rec.pp_L);
    return rec;
}

enum class BlendMode { best, worst };

inline std::string to_string(BlendMode m) {
    return m == BlendMode::best ? "best" : "worst";
}

enum class PairSide { G, L };

inline std::string to_string(PairSide s) { return s == PairSide::G ? "G" : "L"; }

struct BlendAssignment {
    BlendMode mode;
    // passage id -> which generator's pair that passage contributes.
    std::map<std::string, PairSide> chosen;
    std::string tie_policy;
};

/// Split passages in half by delta-pp and assign a generator to each
/// half. "best" takes the externally generated pair where it is most
/// familiar to the trained model (smallest delta-pp) and the self-
/// generated pair elsewhere; "worst" is the exact complement. Ordering
/// ties break on section id so the split is total and permutation-
/// independent; with an odd count the low-delta side holds the extra
/// passage in both modes (so complementarity is exact).
inline BlendAssignment build_blend(const std::vector<PerplexityRecord>& records,
                                   BlendMode mode) {
    if (records.empty()) throw ValidationError("cannot blend zero perplexity records");

    struct Key {
        double delta;
        std::string id;
        const PerplexityRecord* rec;
    };
    std::vector<Key> keys;
    keys.reserve(records.size());
    for (const auto& r : records) {
        if (!std::isfinite(r.delta_pp))
            throw ValidationError("non-finite delta-pp for passage " +
                                  join_path(r.passage_path));
        keys.push_back({r.delta_pp, section_id(r.passage_path), &r});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.delta != b.delta) return a.delta < b.delta;
        return a.id < b.id;
    });

    BlendAssignment out;
    out.mode = mode;
    out.tie_policy = "sort by (delta_pp, section id); low-delta half, rounded up, "
                     "takes G in best mode and L in worst mode";
    const std::size_t low_half = (keys.size() + 1) / 2;  // extra element goes low
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const bool low = i < low_half;
        const PairSide side = (mode == BlendMode::best) == low ? PairSide::G : PairSide::L;
        const auto [it, inserted] = out.chosen.emplace(keys[i].id, side);
        if (!inserted)
            throw ValidationError("duplicate passage in perplexity records: " +
                                  join_path(keys[i].rec->passage_path));
    }
    return out;
}

/// Materialize a blend as QA examples, one per record, taking the
/// assigned side's pair verbatim.
inline std::vector<QAExample> apply_blend(const std::vector<PerplexityRecord>& records,
                                          const BlendAssignment& assignment) {
    std::vector<QAExample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto it = assignment.chosen.find(section_id(r.passage_path));
        if (it == assignment.chosen.end())
            throw ValidationError("blend assignment is missing passage " +
                                  join_path(r.passage_path));
        const QAPair& pair = it->second == PairSide::G ? r.pair_G : r.pair_L;
        QAExample ex;
        ex.id = "blend-" + to_string(assignment.mode) + "-" + section_id(r.passage_path);
        ex.question = pair.question;
        ex.passage_path = r.passage_path;
        ex.answer = pair.answer;
        ex.source = it->second == PairSide::G ? Source::synthetic_distill
                                              : Source::synthetic_self;
        ex.split = Split::train;
        ex.cleaning_state = CleaningState::raw;
        ex.is_negative = false;
        out.push_back(std::move(ex));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const PerplexityRecord& r) {
    return Json{{"passage_path", r.passage_path},
                {"pair_G", Json{{"question", r.pair_G.question}, {"answer", r.pair_G.answer}}},
                {"pair_L", Json{{"question", r.pair_L.question}, {"answer", r.pair_L.answer}}},
                {"pp_G", r.pp_G},
                {"pp_L", r.pp_L},
                {"delta_pp", r.delta_pp}};
}

inline PerplexityRecord perplexity_record_from_json(const Json& j) {
    PerplexityRecord r;
    r.passage_path = j.at("passage_path").get<SectionPath>();
    r.pair_G = {j.at("pair_G").at("question").get<std::string>(),
                j.at("pair_G").at("answer").get<std::string>()};
    r.pair_L = {j.at("pair_L").at("question").get<std::string>(),
                j.at("pair_L").at("answer").get<std::string>()};
    r.pp_G = j.at("pp_G").get<double>();
    r.pp_L = j.at("pp_L").get<double>();
    r.delta_pp = j.at("delta_pp").get<double>();
    return r;
}

inline void save_perplexity_records(const std::filesystem::path& path,
                                    const std::vector<PerplexityRecord>& records) {
    std::vector<Json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    save_jsonl(path, rows);
}

inline std::vector<PerplexityRecord> load_perplexity_records(
    const std::filesystem::path& path) {
    std::vector<PerplexityRecord> out;
    for (const auto& j : load_jsonl(path)) out.push_back(perplexity_record_from_json(j));
    return out;
}

/// Sidecar describing how a blend was produced; everything needed to
/// reproduce or audit the selection, nothing time-dependent.
inline Json blend_manifest(const BlendAssignment& assignment,
                           const std::vector<PerplexityRecord>& records,
                           const std::string& scorer_model,
                           const std::string& tokenizer_id) {
    std::size_t g = 0;
    for (const auto& [id, side] : assignment.chosen)
        if (side == PairSide::G) ++g;
    Json chosen = Json::object();
    for (const auto& [id, side] : assignment.chosen) chosen[id] = to_string(side);
    return Json{{"mode", to_string(assignment.mode)},
                {"tie_policy", assignment.tie_policy},
                {"score_template", kScoreTemplateVersion},
                {"scored_unit", "joint question+answer continuation given passage"},
                {"scorer_model", scorer_model},
                {"tokenizer", tokenizer_id},
                {"passages", records.size()},
                {"from_G", g},
                {"from_L", assignment.chosen.size() - g},
                {"chosen", std::move(chosen)}};
}

}  // namespace dgqa
