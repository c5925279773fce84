#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "dgqa/corpus.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/io.hpp"
#include "dgqa/prompts.hpp"
#include "dgqa/qa.hpp"
#include "dgqa/random.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

// ---------------------------------------------------------------------------
// Train/dev/test assignment
// ---------------------------------------------------------------------------

struct SplitSpec {
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::uint64_t seed = 0;

    std::size_t total() const { return train + dev + test; }
};

/// Shuffle once with the requested seed and deal the dataset into the
/// three splits by position. The sizes must account for every item —
/// silent truncation would quietly change every downstream number.
inline std::vector<QAExample> split_dataset(std::vector<QAExample> dataset,
                                            const SplitSpec& spec) {
    if (spec.total() != dataset.size())
        throw ValidationError("split sizes " + std::to_string(spec.train) + "/" +
                              std::to_string(spec.dev) + "/" + std::to_string(spec.test) +
                              " do not sum to dataset size " +
                              std::to_string(dataset.size()));
    Rng rng(spec.seed);
    rng.shuffle(dataset);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        dataset[i].split = i < spec.train                  ? Split::train
                           : i < spec.train + spec.dev     ? Split::dev
                                                           : Split::test;
    }
    return dataset;
}

inline std::vector<QAExample> filter_split(const std::vector<QAExample>& dataset,
                                           Split split) {
    std::vector<QAExample> out;
    for (const auto& e : dataset)
        if (e.split == split) out.push_back(e);
    return out;
}

// ---------------------------------------------------------------------------
// Supervised fine-tuning export
// ---------------------------------------------------------------------------

/// One chat-shaped training row. The user turn inlines the passage the
/// answer must be grounded in.
struct SftRecord {
    std::string id;
    std::string system_instruction;
    std::string user_turn;
    std::string assistant_turn;
    std::vector<std::string> tags;  // provenance: source, split, negative flag
};

inline std::string sft_user_turn(const std::string& question,
                                 const std::string& passage_body) {
    return "***QUESTION:\n\n" + question + "\n\n***DOCUMENT:\n\n" + passage_body;
}

inline Json to_json(const SftRecord& r) {
    return Json{{"id", r.id},
                {"system", r.system_instruction},
                {"user", r.user_turn},
                {"assistant", r.assistant_turn},
                {"tags", r.tags}};
}

inline SftRecord sft_from_json(const Json& j) {
    SftRecord r;
    r.id = j.at("id").get<std::string>();
    r.system_instruction = j.at("system").get<std::string>();
    r.user_turn = j.at("user").get<std::string>();
    r.assistant_turn = j.at("assistant").get<std::string>();
    r.tags = j.at("tags").get<std::vector<std::string>>();
    return r;
}

/// Render a dataset into training rows. Every item must have an answer
/// and a resolvable passage; failures are collected and reported
/// together rather than one at a time.
inline std::vector<SftRecord> export_sft(const std::vector<QAExample>& dataset,
                                         const Corpus& corpus) {
    std::vector<std::string> missing_answers;
    std::vector<std::string> missing_passages;
    std::vector<SftRecord> out;
    out.reserve(dataset.size());
    for (const auto& e : dataset) {
        if (!e.answer || trim(*e.answer).empty()) {
            missing_answers.push_back(e.id);
            continue;
        }
        if (!corpus.contains(e.passage_path)) {
            missing_passages.push_back(e.id);
            continue;
        }
        SftRecord r;
        r.id = e.id;
        r.system_instruction = prompts::kAnswerInstruction;
        r.user_turn = sft_user_turn(e.question, corpus.get(e.passage_path).body);
        r.assistant_turn = *e.answer;
        r.tags = {"source:" + to_string(e.source), "split:" + to_string(e.split),
                  e.is_negative ? "negative:true" : "negative:false"};
        out.push_back(std::move(r));
    }
    if (!missing_answers.empty() || !missing_passages.empty()) {
        std::string msg = "cannot export training rows;";
        if (!missing_answers.empty()) {
            msg += " items without answers: ";
            for (std::size_t i = 0; i < missing_answers.size(); ++i)
                msg += (i ? ", " : "") + missing_answers[i];
            msg += ";";
        }
        if (!missing_passages.empty()) {
            msg += " items with unresolvable passages: ";
            for (std::size_t i = 0; i < missing_passages.size(); ++i)
                msg += (i ? ", " : "") + missing_passages[i];
        }
        throw ValidationError(msg);
    }
    return out;
}

inline void save_sft(const std::filesystem::path& path,
                     const std::vector<SftRecord>& records) {
    std::vector<Json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    save_jsonl(path, rows);
}

inline std::vector<SftRecord> load_sft(const std::filesystem::path& path) {
    std::vector<SftRecord> out;
    for (const auto& j : load_jsonl(path)) out.push_back(sft_from_json(j));
    return out;
}

// ---------------------------------------------------------------------------
// Dataset validation
// ---------------------------------------------------------------------------

struct ValidationReport {
    std::vector<std::string> duplicate_ids;
    std::vector<std::string> unresolvable_passages;   // item ids
    std::vector<std::string> negative_flag_mismatch;  // item ids
    std::vector<std::string> missing_answers;         // item ids

    bool ok() const {
        return duplicate_ids.empty() && unresolvable_passages.empty() &&
               negative_flag_mismatch.empty() && missing_answers.empty();
    }

    Json to_json() const {
        return Json{{"ok", ok()},
                    {"duplicate_ids", duplicate_ids},
                    {"unresolvable_passages", unresolvable_passages},
                    {"negative_flag_mismatch", negative_flag_mismatch},
                    {"missing_answers", missing_answers}};
    }
};

/// Structural checks a dataset must pass before training or scoring:
/// unique ids, passages that resolve in the corpus, answers present,
/// and negative flags that agree with what the answer text says.
inline ValidationReport validate_dataset(const std::vector<QAExample>& dataset,
                                         const Corpus& corpus,
                                         const std::vector<std::string>& refusal_patterns =
                                             default_refusal_patterns()) {
    ValidationReport report;
    std::set<std::string> seen;
    for (const auto& e : dataset) {
        if (!seen.insert(e.id).second) report.duplicate_ids.push_back(e.id);
        if (!corpus.contains(e.passage_path)) report.unresolvable_passages.push_back(e.id);
        if (!e.answer || trim(*e.answer).empty()) {
            report.missing_answers.push_back(e.id);
            continue;
        }
        // A negative example must read as a refusal. (The reverse is
        // not enforced: a legitimate positive answer may state that the
        // manual lacks some detail.)
        if (e.is_negative && !is_refusal(*e.answer, refusal_patterns))
            report.negative_flag_mismatch.push_back(e.id);
    }
    return report;
}

}  // namespace dgqa
