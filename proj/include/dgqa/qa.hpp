#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgqa/corpus.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/io.hpp"

namespace dgqa {

enum class Source { crowdsourced, synthetic_self, synthetic_distill, negative, challenge };
enum class Split { train, dev, test };
enum class CleaningState { raw, evaluated, cleaned, manually_reviewed };

inline std::string to_string(Source s) {
    switch (s) {
        case Source::crowdsourced: return "crowdsourced";
        case Source::synthetic_self: return "synthetic_self";
        case Source::synthetic_distill: return "synthetic_distill";
        case Source::negative: return "negative";
        case Source::challenge: return "challenge";
    }
    return "crowdsourced";
}

inline Source source_from_string(const std::string& s) {
    if (s == "crowdsourced") return Source::crowdsourced;
    if (s == "synthetic_self") return Source::synthetic_self;
    if (s == "synthetic_distill") return Source::synthetic_distill;
    if (s == "negative") return Source::negative;
    if (s == "challenge") return Source::challenge;
    throw ParseError("unknown source value: " + s);
}

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw ParseError("unknown split value: " + s);
}

inline std::string to_string(CleaningState s) {
    switch (s) {
        case CleaningState::raw: return "raw";
        case CleaningState::evaluated: return "evaluated";
        case CleaningState::cleaned: return "cleaned";
        case CleaningState::manually_reviewed: return "manually_reviewed";
    }
    return "raw";
}

inline CleaningState cleaning_state_from_string(const std::string& s) {
    if (s == "raw") return CleaningState::raw;
    if (s == "evaluated") return CleaningState::evaluated;
    if (s == "cleaned") return CleaningState::cleaned;
    if (s == "manually_reviewed") return CleaningState::manually_reviewed;
    throw ParseError("unknown cleaning_state value: " + s);
}

/// A bare question/answer pair, before it is tied to a passage and
/// given provenance.
struct QAPair {
    std::string question;
    std::string answer;
};

/// A question/passage/answer record with provenance.
struct QAExample {
    std::string id;
    std::string question;
    SectionPath passage_path;
    std::optional<std::string> answer;
    Source source = Source::crowdsourced;
    Split split = Split::train;
    CleaningState cleaning_state = CleaningState::raw;
    bool is_negative = false;
};

inline constexpr int kDatasetSchemaVersion = 1;

inline Json to_json(const QAExample& e) {
    Json j{{"id", e.id},
           {"question", e.question},
           {"passage_path", e.passage_path},
           {"source", to_string(e.source)},
           {"split", to_string(e.split)},
           {"cleaning_state", to_string(e.cleaning_state)},
           {"is_negative", e.is_negative}};
    if (e.answer)
        j["answer"] = *e.answer;
    else
        j["answer"] = nullptr;
    return j;
}

inline QAExample qa_from_json(const Json& j) {
    QAExample e;
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.passage_path = j.at("passage_path").get<SectionPath>();
    if (j.contains("answer") && !j.at("answer").is_null())
        e.answer = j.at("answer").get<std::string>();
    e.source = source_from_string(j.at("source").get<std::string>());
    e.split = split_from_string(j.at("split").get<std::string>());
    e.cleaning_state = cleaning_state_from_string(j.at("cleaning_state").get<std::string>());
    e.is_negative = j.at("is_negative").get<bool>();
    return e;
}

inline std::vector<QAExample> load_dataset(const std::filesystem::path& path) {
    std::vector<QAExample> out;
    for (const auto& j : load_jsonl(path)) out.push_back(qa_from_json(j));
    return out;
}

inline void save_dataset(const std::filesystem::path& path,
                         const std::vector<QAExample>& dataset) {
    std::vector<Json> records;
    records.reserve(dataset.size());
    for (const auto& e : dataset) records.push_back(to_json(e));
    save_jsonl(path, records);
}

/// Deduplicated passage paths in first-occurrence order. Every example
/// must resolve in the corpus; missing paths are reported together.
inline std::vector<SectionPath> referenced_sections(const Corpus& corpus,
                                                    const std::vector<QAExample>& dataset) {
    std::vector<std::string> missing;
    std::vector<SectionPath> order;
    std::set<std::string> seen;
    for (const auto& e : dataset) {
        const std::string key = join_path(e.passage_path);
        if (!corpus.contains(e.passage_path)) {
            if (!seen.count("!" + key)) {
                missing.push_back(key);
                seen.insert("!" + key);
            }
            continue;
        }
        if (seen.insert(key).second) order.push_back(e.passage_path);
    }
    if (!missing.empty()) {
        std::string msg = "dataset references missing sections:";
        for (const auto& m : missing) msg += " [" + m + "]";
        throw ValidationError(msg);
    }
    return order;
}

}  // namespace dgqa
