#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "dgqa/concurrency.hpp"
#include "dgqa/corpus.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/hash.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/prompts.hpp"
#include "dgqa/qa.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

/// The six labels the evaluation prompt allows, in prompt order.
inline const std::array<std::string, 6>& cleaning_labels() {
    static const std::array<std::string, 6> kLabels = {
        "Good",        "Partial answer", "Answer not available",
        "Disfluent",   "Hallucination",  "Other"};
    return kLabels;
}

struct CleaningVerdict {
    std::string label;        // one of cleaning_labels()
    std::string explanation;  // empty iff label == "Good"

    bool good() const { return label == "Good"; }
};

/// Map a raw evaluation reply onto a verdict. The label must be a
/// prefix of the reply under loose normalization — a reply we cannot
/// attribute to exactly one category is a parse error, never a silent
/// "Good".
inline CleaningVerdict parse_cleaning_verdict(const std::string& raw) {
    const std::string flat = normalize_loose(raw);
    CleaningVerdict v;
    std::size_t matched_len = 0;
    for (const auto& label : cleaning_labels()) {
        const std::string want = normalize_loose(label);
        if (flat.rfind(want, 0) != 0) continue;
        // Longest-prefix wins so "Answer not available" is never read
        // as a stray "Answer" label if one were ever added.
        if (want.size() > matched_len) {
            v.label = label;
            matched_len = want.size();
        }
    }
    if (matched_len == 0)
        throw ParseError("evaluation reply does not start with a known label", raw);
    if (v.good()) {
        v.explanation.clear();
        return v;
    }
    // Explanation = everything after the label (and its trailing
    // punctuation) in the original reply. Advance past as many
    // alphanumeric characters as the label itself contains.
    std::string rest(trim(raw));
    std::size_t need = 0;
    for (const char c : v.label)
        if (std::isalnum(static_cast<unsigned char>(c))) ++need;
    std::size_t consumed = 0;
    for (; consumed < rest.size() && need > 0; ++consumed) {
        const char c = rest[consumed];
        if (std::isalnum(static_cast<unsigned char>(c))) --need;
    }
    while (consumed < rest.size() &&
           (rest[consumed] == '.' || rest[consumed] == ':' || rest[consumed] == ',' ||
            std::isspace(static_cast<unsigned char>(rest[consumed]))))
        ++consumed;
    v.explanation = std::string(trim(rest.substr(consumed)));
    if (v.explanation.empty()) v.explanation = "(no explanation provided)";
    return v;
}

/// Stage one: label an answer with one of the six categories.
inline CleaningVerdict evaluate_answer(Gateway& gateway, const std::string& model_id,
                                       const std::string& question,
                                       const ManualSection& passage,
                                       const std::string& answer, Decoding decoding = {}) {
    const std::string raw = gateway.complete(
        prompts::evaluation(model_id, question, passage.body, answer, decoding));
    return parse_cleaning_verdict(raw);
}

/// Stage two: minimally rewrite a flagged answer using the evaluation
/// feedback. The caller decides what to do if this fails; the original
/// answer is never modified in place.
inline std::string rewrite_answer(Gateway& gateway, const std::string& model_id,
                                  const std::string& question, const ManualSection& passage,
                                  const std::string& answer, const CleaningVerdict& verdict,
                                  Decoding decoding = {}) {
    const std::string evaluation =
        verdict.label + ". " + (verdict.explanation.empty() ? "There are no errors."
                                                            : verdict.explanation);
    const std::string rewritten = gateway.complete(prompts::rewrite(
        model_id, question, passage.path, passage.body, answer, evaluation, decoding));
    const std::string out(trim(rewritten));
    if (out.empty()) throw QualityError("rewrite produced an empty answer");
    return out;
}

struct CleaningLogEntry {
    std::string id;
    std::string label;
    std::string explanation;
    bool changed = false;
    std::string before_hash;  // sha256 of the original answer
    std::string after_hash;   // sha256 of the final answer
    std::string error;        // non-empty when this item was left raw
};

inline Json to_json(const CleaningLogEntry& e) {
    return Json{{"id", e.id},           {"label", e.label},
                {"explanation", e.explanation}, {"changed", e.changed},
                {"before_hash", e.before_hash}, {"after_hash", e.after_hash},
                {"error", e.error}};
}

struct CleaningResult {
    std::vector<QAExample> dataset;       // same order as the input
    std::vector<CleaningLogEntry> log;    // one entry per item, input order
    std::size_t rewritten = 0;
    std::size_t kept_good = 0;
    std::size_t failed = 0;
};

/// Run evaluate-then-rewrite over a dataset. "Good" answers pass
/// through untouched; flagged answers are rewritten; per-item failures
/// are logged and the item is kept with its original answer, so one bad
/// reply never aborts the batch.
inline CleaningResult clean_dataset(const std::vector<QAExample>& dataset,
                                    const Corpus& corpus, Gateway& gateway,
                                    const std::string& model_id,
                                    std::size_t concurrency = 4, Decoding decoding = {}) {
    struct ItemOutcome {
        QAExample example;
        CleaningLogEntry entry;
    };
    auto outcomes = parallel_map(dataset, concurrency, [&](const QAExample& item) {
        ItemOutcome out{item, {}};
        out.entry.id = item.id;
        const std::string before = item.answer.value_or("");
        out.entry.before_hash = sha256_hex(before);
        out.entry.after_hash = out.entry.before_hash;
        if (!item.answer || before.empty()) {
            out.entry.error = "item has no answer to clean";
            return out;
        }
        try {
            const ManualSection& passage = corpus.get(item.passage_path);
            const CleaningVerdict verdict =
                evaluate_answer(gateway, model_id, item.question, passage, before, decoding);
            out.entry.label = verdict.label;
            out.entry.explanation = verdict.explanation;
            if (!verdict.good()) {
                const std::string fixed = rewrite_answer(gateway, model_id, item.question,
                                                         passage, before, verdict, decoding);
                out.example.answer = fixed;
                out.entry.changed = fixed != before;
                out.entry.after_hash = sha256_hex(fixed);
            }
            out.example.cleaning_state = CleaningState::cleaned;
        } catch (const Error& e) {
            // Keep the raw answer; record why. The evaluated state is
            // only claimed when a verdict was actually obtained.
            out.entry.error = e.what();
            out.example.cleaning_state =
                out.entry.label.empty() ? CleaningState::raw : CleaningState::evaluated;
        }
        return out;
    });

    CleaningResult result;
    for (auto& o : outcomes) {
        if (!o.entry.error.empty())
            ++result.failed;
        else if (o.entry.changed || o.entry.label != "Good")
            ++result.rewritten;
        else
            ++result.kept_good;
        result.dataset.push_back(std::move(o.example));
        result.log.push_back(std::move(o.entry));
    }
    return result;
}

}  // namespace dgqa
