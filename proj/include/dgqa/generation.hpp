#pragma once

#include <limits>
#include <regex>
#include <string>
#include <vector>

#include "dgqa/corpus.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/hash.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/prompts.hpp"
#include "dgqa/qa.hpp"
#include "dgqa/random.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

/// Answer one question against its own passage. The gateway already
/// rejects empty completions, so a returned string is always non-blank.
inline std::string generate_answer(Gateway& gateway, const std::string& model_id,
                                   const std::string& question,
                                   const ManualSection& passage, Decoding decoding = {}) {
    return gateway.complete(prompts::answer(model_id, question, passage.body, decoding));
}

/// Parse "N. ***QUESTION: ... ***ANSWER: ..." blocks out of raw model
/// output. The block count must match what was requested; anything else
/// is a parse failure that keeps the raw text for inspection.
inline std::vector<QAPair> parse_generated_pairs(const std::string& raw, int expected_count) {
    static const std::regex kBlockStart(R"((^|\n)\s*(\d+\.\s*)?\*\*\*QUESTION:)");
    std::vector<std::size_t> starts;
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), kBlockStart);
         it != std::sregex_iterator(); ++it)
        starts.push_back(static_cast<std::size_t>(it->position(0)));
    if (starts.empty())
        throw ParseError("no question/answer blocks found in generated pairs", raw);

    std::vector<QAPair> pairs;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const auto end = i + 1 < starts.size() ? starts[i + 1] : raw.size();
        const std::string block = raw.substr(starts[i], end - starts[i]);
        const auto q_mark = block.find("***QUESTION:");
        const auto a_mark = block.find("***ANSWER:");
        if (q_mark == std::string::npos || a_mark == std::string::npos || a_mark < q_mark)
            throw ParseError("malformed question/answer block " + std::to_string(i + 1), raw);
        QAPair pair;
        pair.question = std::string(trim(block.substr(q_mark + 12, a_mark - (q_mark + 12))));
        pair.answer = std::string(trim(block.substr(a_mark + 10)));
        if (pair.question.empty() || pair.answer.empty())
            throw ParseError("empty question or answer in block " + std::to_string(i + 1), raw);
        pairs.push_back(std::move(pair));
    }
    if (static_cast<int>(pairs.size()) != expected_count)
        throw ParseError("expected " + std::to_string(expected_count) +
                             " generated pairs but parsed " + std::to_string(pairs.size()),
                         raw);
    return pairs;
}

/// Ask for `count` new QA pairs grounded in one passage and parse the
/// reply strictly.
inline std::vector<QAPair> generate_synthetic_pairs(Gateway& gateway,
                                                    const std::string& model_id,
                                                    const ManualSection& passage, int count,
                                                    Decoding decoding = {}) {
    if (count <= 0) throw ValidationError("synthetic pair count must be positive");
    const std::string raw = gateway.complete(
        prompts::pair_generation(model_id, count, passage.body, decoding));
    return parse_generated_pairs(raw, count);
}

/// Answer a question against a passage that does not contain the
/// answer. A grounded model should refuse; if it answers anyway the
/// output is unusable as a negative example and we fail loudly.
inline std::string synthesize_negative(Gateway& gateway, const std::string& model_id,
                                       const std::string& question,
                                       const ManualSection& wrong_passage,
                                       const std::vector<std::string>& refusal_patterns =
                                           default_refusal_patterns(),
                                       Decoding decoding = {}) {
    const std::string answer =
        gateway.complete(prompts::answer(model_id, question, wrong_passage.body, decoding));
    if (!is_refusal(answer, refusal_patterns))
        throw QualityError("model answered instead of refusing on a mismatched passage: " +
                           answer);
    return answer;
}

/// Append `count` refusal examples to a dataset: sample distinct source
/// questions, pair each with a different section than its own, and keep
/// the model's refusal as the target answer. Fully determined by
/// (dataset order, corpus, seed).
inline std::vector<QAExample> augment_with_negatives(
    const std::vector<QAExample>& dataset, const Corpus& corpus, Gateway& gateway,
    const std::string& model_id, std::size_t count, std::uint64_t seed,
    const std::vector<std::string>& refusal_patterns = default_refusal_patterns(),
    Decoding decoding = {}) {
    if (count > dataset.size())
        throw ValidationError("cannot sample " + std::to_string(count) +
                              " distinct questions from a dataset of " +
                              std::to_string(dataset.size()));
    Rng rng(seed);
    const auto picked = rng.sample_indices(dataset.size(), count);

    std::vector<QAExample> out = dataset;
    for (const auto idx : picked) {
        const QAExample& src = dataset[idx];
        // A model may answer from an unlucky near-duplicate section; a
        // few fresh draws keep the run deterministic while tolerating
        // that. Persistent non-refusal is a real quality failure.
        constexpr int kMaxDraws = 5;
        std::string answer;
        const ManualSection* wrong = nullptr;
        for (int attempt = 0;; ++attempt) {
            const ManualSection& candidate = corpus.sample_other(src.passage_path, rng);
            try {
                answer = synthesize_negative(gateway, model_id, src.question, candidate,
                                             refusal_patterns, decoding);
                wrong = &candidate;
                break;
            } catch (const QualityError&) {
                if (attempt + 1 >= kMaxDraws) throw;
            }
        }
        QAExample neg;
        neg.id = "neg-" + short_hash(src.id + "\x1f" + join_path(wrong->path));
        neg.question = src.question;
        neg.passage_path = wrong->path;
        neg.answer = answer;
        neg.source = Source::negative;
        neg.split = Split::train;
        neg.cleaning_state = CleaningState::raw;
        neg.is_negative = true;
        out.push_back(std::move(neg));
    }
    return out;
}

struct AssignedPassage {
    SectionPath path;
    bool fuzzy = false;  // true when matched loosely rather than verbatim
};

/// Resolve a model-proposed section path against the corpus: verbatim
/// first, then punctuation/case-insensitive, then nearest within a 25%
/// edit-distance budget. Anything farther is left unassigned.
inline AssignedPassage resolve_assigned_path(const Corpus& corpus, const std::string& reply) {
    const auto lines = split_lines(reply);
    std::string first_line;
    for (const auto& l : lines)
        if (!trim(l).empty()) {
            first_line = std::string(trim(l));
            break;
        }
    if (first_line.empty())
        throw UnassignedError("model returned an empty section path", reply);

    const SectionPath proposed = parse_path(first_line);
    if (corpus.contains(proposed)) return {proposed, false};

    const std::string want = normalize_loose(join_path(proposed));
    const ManualSection* nearest = nullptr;
    std::size_t nearest_dist = std::numeric_limits<std::size_t>::max();
    for (const auto& s : corpus.sections()) {
        const std::string have = normalize_loose(join_path(s.path));
        if (have == want) return {s.path, true};
        const auto dist = edit_distance(want, have);
        if (dist < nearest_dist) {
            nearest_dist = dist;
            nearest = &s;
        }
    }
    if (nearest != nullptr && nearest_dist * 4 <= normalize_loose(join_path(nearest->path)).size())
        return {nearest->path, true};
    throw UnassignedError("no section within edit-distance budget of '" + first_line + "'",
                          reply);
}

/// Ask the model which section a free-floating question refers to, then
/// resolve its reply against the corpus.
inline AssignedPassage assign_passage(const Corpus& corpus, Gateway& gateway,
                                      const std::string& model_id,
                                      const std::string& question, Decoding decoding = {}) {
    Json entries = Json::array();
    for (const auto& s : corpus.sections())
        entries.push_back(Json{{"path", join_path(s.path)}, {"text", s.body}});
    const std::string reply =
        gateway.complete(prompts::passage_assignment(model_id, question, entries, decoding));
    return resolve_assigned_path(corpus, reply);
}

}  // namespace dgqa
