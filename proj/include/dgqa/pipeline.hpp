#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dgqa/cleaning.hpp"
#include "dgqa/concurrency.hpp"
#include "dgqa/corpus.hpp"
#include "dgqa/datasets.hpp"
#include "dgqa/errors.hpp"
#include "dgqa/evaluation.hpp"
#include "dgqa/generation.hpp"
#include "dgqa/http_provider.hpp"
#include "dgqa/llm_gateway.hpp"
#include "dgqa/selection.hpp"

namespace dgqa {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// One model role in the pipeline. Every LLM-touching step names a role
/// rather than a model, so swapping providers never touches stage code.
struct RoleConfig {
    std::string provider = "mock";  // "mock" | "http"
    std::string model_id = "mock-model";
    std::string endpoint;           // http provider only
    std::string api_key_env;        // env var holding the credential
    bool supports_logprobs = true;
    bool supports_embeddings = true;
    std::string tokenizer = "mock/whitespace";
};

inline RoleConfig role_from_json(const Json& j, RoleConfig defaults = {}) {
    RoleConfig r = std::move(defaults);
    if (j.contains("provider")) r.provider = j.at("provider").get<std::string>();
    if (j.contains("model_id")) r.model_id = j.at("model_id").get<std::string>();
    if (j.contains("endpoint")) r.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("api_key_env")) r.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("supports_logprobs"))
        r.supports_logprobs = j.at("supports_logprobs").get<bool>();
    if (j.contains("supports_embeddings"))
        r.supports_embeddings = j.at("supports_embeddings").get<bool>();
    if (j.contains("tokenizer")) r.tokenizer = j.at("tokenizer").get<std::string>();
    return r;
}

struct CrowdsourcedConfig {
    std::filesystem::path path;  // QA dataset rows (JSONL)
    SplitSpec split;
};

struct PipelineConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path output_dir = "out";
    std::filesystem::path cache_dir = "cache";
    GatewayMode mode = GatewayMode::record;
    std::size_t concurrency = 4;
    int pairs_per_section = 2;
    std::size_t negative_count = 2;
    std::uint64_t negatives_seed = 11;
    int score_pair_index = 0;  // which of each side's pairs gets scored
    std::optional<CrowdsourcedConfig> crowdsourced;
    std::map<std::string, RoleConfig> roles;  // generator_self, generator_distill,
                                              // cleaner, judge, scorer, embedder
};

inline GatewayMode gateway_mode_from_string(const std::string& s) {
    if (s == "live") return GatewayMode::live;
    if (s == "record") return GatewayMode::record;
    if (s == "replay") return GatewayMode::replay;
    throw ParseError("unknown gateway mode (expected live/record/replay)", s);
}

inline std::string to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::live: return "live";
        case GatewayMode::record: return "record";
        case GatewayMode::replay: return "replay";
    }
    throw std::logic_error("unhandled gateway mode");
}

inline PipelineConfig pipeline_config_from_json(const Json& j,
                                                const std::filesystem::path& base_dir) {
    PipelineConfig c;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base_dir / fp;
    };
    if (!j.contains("corpus")) throw ValidationError("pipeline config is missing 'corpus'");
    c.corpus_path = resolve(j.at("corpus").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("cache_dir")) c.cache_dir = resolve(j.at("cache_dir").get<std::string>());
    if (j.contains("mode")) c.mode = gateway_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("concurrency")) c.concurrency = j.at("concurrency").get<std::size_t>();
    if (j.contains("pairs_per_section"))
        c.pairs_per_section = j.at("pairs_per_section").get<int>();
    if (j.contains("negatives")) c.negative_count = j.at("negatives").get<std::size_t>();
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        if (s.contains("negatives")) c.negatives_seed = s.at("negatives").get<std::uint64_t>();
    }
    if (j.contains("score_pair_index"))
        c.score_pair_index = j.at("score_pair_index").get<int>();
    if (j.contains("crowdsourced")) {
        const auto& cs = j.at("crowdsourced");
        CrowdsourcedConfig cc;
        cc.path = resolve(cs.at("path").get<std::string>());
        const auto& sp = cs.at("split");
        cc.split.train = sp.at("train").get<std::size_t>();
        cc.split.dev = sp.at("dev").get<std::size_t>();
        cc.split.test = sp.at("test").get<std::size_t>();
        cc.split.seed = sp.value("seed", std::uint64_t{13});
        c.crowdsourced = std::move(cc);
    }
    if (j.contains("roles"))
        for (const auto& [name, rj] : j.at("roles").items())
            c.roles[name] = role_from_json(rj);
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return pipeline_config_from_json(load_json(path), path.parent_path());
}

inline std::shared_ptr<Provider> make_provider(const RoleConfig& role) {
    if (role.provider == "mock") return std::make_shared<MockProvider>();
    if (role.provider == "http") {
        HttpProviderConfig hc;
        hc.name = "http:" + role.model_id;
        hc.base_url = role.endpoint;
        hc.api_key_env = role.api_key_env;
        hc.supports_logprobs = role.supports_logprobs;
        hc.supports_embeddings = role.supports_embeddings;
        hc.tokenizer = role.tokenizer;
        return std::make_shared<HttpProvider>(hc);
    }
    throw ValidationError("unknown provider kind '" + role.provider + "'");
}

// ---------------------------------------------------------------------------
// Stage manifests: deterministic build records. Content hashes only —
// no timestamps — so two runs over the same inputs write identical
// manifests and a stage can prove it has nothing to do.
// ---------------------------------------------------------------------------

namespace detail {

inline Json hash_files(const std::filesystem::path& dir,
                       const std::vector<std::string>& names) {
    Json out = Json::object();
    for (const auto& n : names) out[n] = sha256_of_file(dir / n);
    return out;
}

}  // namespace detail

class StageLedger {
public:
    explicit StageLedger(std::filesystem::path output_dir)
        : output_dir_(std::move(output_dir)) {}

    std::filesystem::path stage_dir(const std::string& stage) const {
        return output_dir_ / stage;
    }

    std::filesystem::path manifest_path(const std::string& stage) const {
        return stage_dir(stage) / "manifest.json";
    }

    /// A stage is fresh when its manifest exists, the recorded inputs
    /// and parameters match, and every recorded output still hashes the
    /// same. Anything else means the stage must run again.
    bool fresh(const std::string& stage, const Json& inputs, const Json& params) const {
        const auto mpath = manifest_path(stage);
        if (!std::filesystem::exists(mpath)) return false;
        Json m;
        try {
            m = load_json(mpath);
        } catch (const Error&) {
            return false;  // unreadable manifest = rebuild
        }
        if (m.value("inputs", Json::object()) != inputs) return false;
        if (m.value("params", Json::object()) != params) return false;
        // Keep the copy alive for the whole loop: items() holds a
        // reference, and a temporary here would dangle.
        const Json outputs = m.value("outputs", Json::object());
        for (const auto& [name, hash] : outputs.items()) {
            const auto p = stage_dir(stage) / name;
            if (!std::filesystem::exists(p)) return false;
            if (sha256_of_file(p) != hash.get<std::string>()) return false;
        }
        return true;
    }

    void commit(const std::string& stage, const Json& inputs, const Json& params,
                const std::vector<std::string>& output_names) {
        Json m{{"stage", stage},
               {"inputs", inputs},
               {"params", params},
               {"outputs", detail::hash_files(stage_dir(stage), output_names)}};
        write_file(manifest_path(stage), m.dump(2) + "\n");
    }

    /// Hash of a prior stage's output, or a dependency error telling
    /// the operator which stage to run.
    std::string require_output(const std::string& stage, const std::string& name) const {
        const auto p = stage_dir(stage) / name;
        if (!std::filesystem::exists(p))
            throw DependencyError("missing " + name + " from stage '" + stage +
                                      "'; run that stage first",
                                  stage);
        return sha256_of_file(p);
    }

private:
    std::filesystem::path output_dir_;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct StageOutcome {
    std::string stage;
    bool ran = false;  // false = manifest said up-to-date
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config)
        : config_(std::move(config)), ledger_(config_.output_dir) {
        // Roles not named in the config fall back to distinct mock
        // models so their cache entries never collide.
        for (const auto* name : kRoleNames)
            if (!config_.roles.count(name)) {
                RoleConfig r;
                r.model_id = std::string("mock-") + name;
                config_.roles[name] = r;
            }
        // Scoring and similarity require capabilities that are fixed at
        // configuration time; fail here, not mid-run.
        if (!config_.roles.at("scorer").supports_logprobs)
            throw CapabilityError("role 'scorer' must support token logprobs");
        if (!config_.roles.at("embedder").supports_embeddings)
            throw CapabilityError("role 'embedder' must support embeddings");
        std::filesystem::create_directories(config_.output_dir);
    }

    const PipelineConfig& config() const { return config_; }

    /// Total provider traffic across all roles; zero after a pure
    /// replay run.
    int outbound_calls() const {
        int total = 0;
        for (const auto& [name, gw] : gateways_)
            if (gw) total += gw->outbound_calls();
        return total;
    }

    static const std::vector<std::string>& stage_names() {
        static const std::vector<std::string> kStages = {
            "ingest", "synth", "clean", "negatives", "score",
            "blend",  "export", "evaluate", "report"};
        return kStages;
    }

    StageOutcome run_stage(const std::string& name) {
        if (name == "ingest") return ingest();
        if (name == "synth") return synth();
        if (name == "clean") return clean();
        if (name == "negatives") return negatives();
        if (name == "score") return score();
        if (name == "blend") return blend();
        if (name == "export") return export_arms();
        if (name == "evaluate") return evaluate();
        if (name == "report") return report();
        throw ValidationError("unknown stage '" + name + "'");
    }

    std::vector<StageOutcome> run_all() {
        std::vector<StageOutcome> out;
        for (const auto& s : stage_names()) out.push_back(run_stage(s));
        return out;
    }

    // -- stages -----------------------------------------------------------

    StageOutcome ingest() {
        Json inputs{{"corpus", sha256_of_file(config_.corpus_path)}};
        Json params{{"form", "flat"}};
        if (ledger_.fresh("ingest", inputs, params)) return {"ingest", false};
        const Corpus corpus = load_corpus(config_.corpus_path);
        save_corpus(corpus, ledger_.stage_dir("ingest") / "corpus.json", CorpusForm::flat);
        ledger_.commit("ingest", inputs, params, {"corpus.json"});
        return {"ingest", true};
    }

    StageOutcome synth() {
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")}};
        Json params{{"pairs_per_section", config_.pairs_per_section},
                    {"generator_self", config_.roles.at("generator_self").model_id},
                    {"generator_distill", config_.roles.at("generator_distill").model_id},
                    {"prompt_version", prompts::kPromptVersion}};
        if (ledger_.fresh("synth", inputs, params)) return {"synth", false};

        const Corpus corpus = load_ingested_corpus();
        auto generate_side = [&](const std::string& role, Source source,
                                 const std::string& prefix) {
            Gateway& gw = gateway(role);
            const std::string model = config_.roles.at(role).model_id;
            auto per_section = parallel_map(
                corpus.sections(), config_.concurrency, [&](const ManualSection& s) {
                    return generate_synthetic_pairs(gw, model, s, config_.pairs_per_section);
                });
            std::vector<QAExample> out;
            for (std::size_t si = 0; si < corpus.sections().size(); ++si) {
                const auto& section = corpus.sections()[si];
                for (std::size_t pi = 0; pi < per_section[si].size(); ++pi) {
                    QAExample e;
                    e.id = prefix + "-" + section_id(section.path) + "-" +
                           std::to_string(pi);
                    e.question = per_section[si][pi].question;
                    e.passage_path = section.path;
                    e.answer = per_section[si][pi].answer;
                    e.source = source;
                    e.split = Split::train;
                    e.cleaning_state = CleaningState::raw;
                    out.push_back(std::move(e));
                }
            }
            return out;
        };
        save_dataset(ledger_.stage_dir("synth") / "self.jsonl",
                     generate_side("generator_self", Source::synthetic_self, "synl"));
        save_dataset(ledger_.stage_dir("synth") / "distill.jsonl",
                     generate_side("generator_distill", Source::synthetic_distill, "syng"));
        ledger_.commit("synth", inputs, params, {"self.jsonl", "distill.jsonl"});
        return {"synth", true};
    }

    StageOutcome clean() {
        const auto [target_stage, target_name] = cleaning_target();
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")},
                    {target_name, ledger_.require_output(target_stage, target_name)}};
        Json params{{"cleaner", config_.roles.at("cleaner").model_id},
                    {"target", target_stage + "/" + target_name},
                    {"prompt_version", prompts::kPromptVersion}};
        if (ledger_.fresh("clean", inputs, params)) return {"clean", false};

        const Corpus corpus = load_ingested_corpus();
        const auto dataset = load_dataset(ledger_.stage_dir(target_stage) / target_name);
        const auto result =
            clean_dataset(dataset, corpus, gateway("cleaner"),
                          config_.roles.at("cleaner").model_id, config_.concurrency);
        save_dataset(ledger_.stage_dir("clean") / "cleaned.jsonl", result.dataset);
        std::vector<Json> log_rows;
        for (const auto& e : result.log) log_rows.push_back(to_json(e));
        save_jsonl(ledger_.stage_dir("clean") / "log.jsonl", log_rows);
        ledger_.commit("clean", inputs, params, {"cleaned.jsonl", "log.jsonl"});
        return {"clean", true};
    }

    StageOutcome negatives() {
        // Augment the cleaned dataset when cleaning ran, otherwise the
        // raw self-generated one.
        const bool cleaned =
            std::filesystem::exists(ledger_.stage_dir("clean") / "cleaned.jsonl");
        const std::string in_stage = cleaned ? "clean" : "synth";
        const std::string in_name = cleaned ? "cleaned.jsonl" : "self.jsonl";
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")},
                    {in_name, ledger_.require_output(in_stage, in_name)}};
        Json params{{"count", config_.negative_count},
                    {"seed", config_.negatives_seed},
                    {"generator", config_.roles.at("generator_self").model_id},
                    {"source", in_stage + "/" + in_name}};
        if (ledger_.fresh("negatives", inputs, params)) return {"negatives", false};

        const Corpus corpus = load_ingested_corpus();
        const auto dataset = load_dataset(ledger_.stage_dir(in_stage) / in_name);
        const auto augmented = augment_with_negatives(
            dataset, corpus, gateway("generator_self"),
            config_.roles.at("generator_self").model_id, config_.negative_count,
            config_.negatives_seed);
        save_dataset(ledger_.stage_dir("negatives") / "dataset.jsonl", augmented);
        ledger_.commit("negatives", inputs, params, {"dataset.jsonl"});
        return {"negatives", true};
    }

    StageOutcome score() {
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")},
                    {"self.jsonl", ledger_.require_output("synth", "self.jsonl")},
                    {"distill.jsonl", ledger_.require_output("synth", "distill.jsonl")}};
        Json params{{"scorer", config_.roles.at("scorer").model_id},
                    {"tokenizer", gateway("scorer").tokenizer_id()},
                    {"template", kScoreTemplateVersion},
                    {"pair_index", config_.score_pair_index},
                    {"scored_unit", "joint question+answer continuation given passage"}};
        if (ledger_.fresh("score", inputs, params)) return {"score", false};

        const Corpus corpus = load_ingested_corpus();
        const auto self = load_dataset(ledger_.stage_dir("synth") / "self.jsonl");
        const auto distill = load_dataset(ledger_.stage_dir("synth") / "distill.jsonl");
        auto pick = [&](const std::vector<QAExample>& ds, const SectionPath& path,
                        const char* side) {
            int seen = 0;
            for (const auto& e : ds)
                if (e.passage_path == path) {
                    if (seen == config_.score_pair_index)
                        return QAPair{e.question, e.answer.value_or("")};
                    ++seen;
                }
            throw ValidationError(std::string("no ") + side + " pair with index " +
                                  std::to_string(config_.score_pair_index) +
                                  " for passage " + join_path(path));
        };
        Gateway& scorer = gateway("scorer");
        const std::string model = config_.roles.at("scorer").model_id;
        auto records = parallel_map(
            corpus.sections(), config_.concurrency, [&](const ManualSection& s) {
                return score_record(scorer, model, s, pick(distill, s.path, "distilled"),
                                    pick(self, s.path, "self-generated"));
            });
        save_perplexity_records(ledger_.stage_dir("score") / "perplexity.jsonl", records);
        ledger_.commit("score", inputs, params, {"perplexity.jsonl"});
        return {"score", true};
    }

    StageOutcome blend() {
        Json inputs{{"perplexity.jsonl", ledger_.require_output("score", "perplexity.jsonl")}};
        Json params{{"modes", "best+worst"}};
        if (ledger_.fresh("blend", inputs, params)) return {"blend", false};

        const auto records =
            load_perplexity_records(ledger_.stage_dir("score") / "perplexity.jsonl");
        const std::string tokenizer = gateway("scorer").tokenizer_id();
        const std::string scorer_model = config_.roles.at("scorer").model_id;
        for (const auto mode : {BlendMode::best, BlendMode::worst}) {
            const auto assignment = build_blend(records, mode);
            save_dataset(ledger_.stage_dir("blend") / (to_string(mode) + ".jsonl"),
                         apply_blend(records, assignment));
            write_file(ledger_.stage_dir("blend") / (to_string(mode) + "_manifest.json"),
                       blend_manifest(assignment, records, scorer_model, tokenizer).dump(2) +
                           "\n");
        }
        ledger_.commit("blend", inputs, params,
                       {"best.jsonl", "worst.jsonl", "best_manifest.json",
                        "worst_manifest.json"});
        return {"blend", true};
    }

    /// Arm name -> producing stage + file. Only arms whose inputs exist
    /// are exported; asking for nothing is a dependency error.
    std::vector<std::pair<std::string, std::filesystem::path>> available_arms() const {
        const std::vector<std::pair<std::string, std::filesystem::path>> candidates = {
            {"synth-self", ledger_.stage_dir("synth") / "self.jsonl"},
            {"synth-distill", ledger_.stage_dir("synth") / "distill.jsonl"},
            {"autocleaned", ledger_.stage_dir("clean") / "cleaned.jsonl"},
            {"synth-self-plus", ledger_.stage_dir("negatives") / "dataset.jsonl"},
            {"best-blend", ledger_.stage_dir("blend") / "best.jsonl"},
            {"worst-blend", ledger_.stage_dir("blend") / "worst.jsonl"},
            {"manual", ledger_.stage_dir("review") / "dataset.jsonl"},
        };
        std::vector<std::pair<std::string, std::filesystem::path>> out;
        for (const auto& c : candidates)
            if (std::filesystem::exists(c.second)) out.push_back(c);
        return out;
    }

    StageOutcome export_arms() {
        const auto arms = available_arms();
        if (arms.empty())
            throw DependencyError("no datasets available to export; run synth first",
                                  "synth");
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")}};
        for (const auto& [arm, path] : arms) inputs[arm] = sha256_of_file(path);
        Json params{{"schema_version", kDatasetSchemaVersion}};
        if (ledger_.fresh("export", inputs, params)) return {"export", false};

        const Corpus corpus = load_ingested_corpus();
        std::vector<std::string> outputs;
        for (const auto& [arm, path] : arms) {
            const auto dataset = load_dataset(path);
            const auto report = validate_dataset(dataset, corpus);
            if (!report.ok())
                throw ValidationError("arm '" + arm + "' failed validation: " +
                                      report.to_json().dump());
            save_sft(ledger_.stage_dir("export") / (arm + ".jsonl"),
                     export_sft(dataset, corpus));
            outputs.push_back(arm + ".jsonl");
        }
        ledger_.commit("export", inputs, params, outputs);
        return {"export", true};
    }

    StageOutcome evaluate() {
        const auto arms = available_arms();
        if (arms.empty())
            throw DependencyError("no datasets available to evaluate; run synth first",
                                  "synth");
        Json inputs{{"corpus.json", ledger_.require_output("ingest", "corpus.json")}};
        for (const auto& [arm, path] : arms) inputs[arm] = sha256_of_file(path);
        Json params{{"judge", config_.roles.at("judge").model_id},
                    {"scorer", config_.roles.at("scorer").model_id},
                    {"embedder", config_.roles.at("embedder").model_id}};
        if (ledger_.fresh("evaluate", inputs, params)) return {"evaluate", false};

        const Corpus corpus = load_ingested_corpus();
        Json report = Json::object();
        for (const auto& [arm, path] : arms) {
            const auto dataset = load_dataset(path);
            std::vector<std::string> questions;
            std::vector<std::pair<std::string, std::string>> response_passage;
            for (const auto& e : dataset) {
                questions.push_back(e.question);
                if (e.answer)
                    response_passage.push_back(
                        {*e.answer, corpus.get(e.passage_path).body});
            }
            DiversityReport div;
            div.distinct_1 = distinct_n(questions, 1);
            div.distinct_2 = distinct_n(questions, 2);
            div.distinct_3 = distinct_n(questions, 3);
            div.mean_length = mean_token_length(questions);
            div.mean_perplexity = mean_perplexity(
                gateway("scorer"), config_.roles.at("scorer").model_id, questions);
            div.mean_similarity = mean_pairwise_similarity(
                gateway("embedder"), config_.roles.at("embedder").model_id, questions);
            const auto fs =
                factscore_corpus(gateway("judge"), config_.roles.at("judge").model_id,
                                 response_passage);
            report[arm] = Json{{"items", dataset.size()},
                               {"diversity", to_json(div)},
                               {"factscore", Json{{"mean", fs.mean_score},
                                                  {"scored", fs.scored},
                                                  {"refusals", fs.refusals},
                                                  {"failures", fs.failures}}}};
        }
        write_file(ledger_.stage_dir("evaluate") / "evaluation.json",
                   report.dump(2) + "\n");
        ledger_.commit("evaluate", inputs, params, {"evaluation.json"});
        return {"evaluate", true};
    }

    StageOutcome report() {
        Json inputs{{"evaluation.json", ledger_.require_output("evaluate", "evaluation.json")}};
        Json params = Json::object();
        if (ledger_.fresh("report", inputs, params)) return {"report", false};

        // Summarize every build stage upstream of this one. The report's
        // own manifest is excluded: it cannot exist before report.json
        // is written, and picking up a stale copy on re-runs would make
        // the report depend on build history rather than content.
        Json stages = Json::object();
        for (const auto& s : stage_names()) {
            if (s == "report") continue;
            const auto mp = ledger_.manifest_path(s);
            if (std::filesystem::exists(mp)) stages[s] = load_json(mp);
        }
        Json arms = Json::object();
        for (const auto& [arm, path] : available_arms())
            arms[arm] = load_dataset(path).size();
        Json out{{"stages", std::move(stages)},
                 {"dataset_sizes", std::move(arms)},
                 {"evaluation",
                  load_json(ledger_.stage_dir("evaluate") / "evaluation.json")}};
        write_file(ledger_.stage_dir("report") / "report.json", out.dump(2) + "\n");
        ledger_.commit("report", inputs, params, {"report.json"});
        return {"report", true};
    }

    Gateway& gateway(const std::string& role_name) {
        auto& slot = gateways_[role_name];
        if (!slot) {
            const auto it = config_.roles.find(role_name);
            if (it == config_.roles.end())
                throw ValidationError("no configuration for role '" + role_name + "'");
            GatewayConfig gc;
            gc.mode = config_.mode;
            gc.cache_dir = config_.cache_dir;
            gc.concurrency = config_.concurrency;
            slot = std::make_unique<Gateway>(make_provider(it->second), gc);
        }
        return *slot;
    }

private:
    static constexpr const char* kRoleNames[] = {"generator_self", "generator_distill",
                                                 "cleaner",        "judge",
                                                 "scorer",         "embedder"};

    Corpus load_ingested_corpus() const {
        return load_corpus(ledger_.stage_dir("ingest") / "corpus.json");
    }

    /// Cleaning applies to the crowdsourced answers when a crowdsourced
    /// dataset is configured, otherwise to the self-generated ones.
    std::pair<std::string, std::string> cleaning_target() const {
        if (config_.crowdsourced) return {"crowd", "dataset.jsonl"};
        return {"synth", "self.jsonl"};
    }

    PipelineConfig config_;
    StageLedger ledger_;
    std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

// ---------------------------------------------------------------------------
// Interactive review
// ---------------------------------------------------------------------------

struct ReviewOutcome {
    std::vector<QAExample> dataset;
    std::size_t accepted = 0;
    std::size_t edited = 0;
    std::size_t skipped = 0;
    bool completed = false;  // false = reviewer quit early
};

/// Walk a dataset item by item, letting a human accept, edit, or skip
/// each answer. Every decision is appended to `progress_path`
/// immediately, so an interrupted session resumes at the first
/// undecided item. Streams are injected so sessions can be scripted.
inline ReviewOutcome review_loop(std::vector<QAExample> dataset,
                                 const std::filesystem::path& progress_path,
                                 std::istream& in, std::ostream& out,
                                 const std::string& reviewer) {
    std::map<std::string, Json> decided;
    if (std::filesystem::exists(progress_path))
        for (const auto& row : load_jsonl(progress_path))
            decided[row.at("id").get<std::string>()] = row;

    ReviewOutcome outcome;
    auto apply = [&](QAExample& e, const Json& d) {
        const auto action = d.at("action").get<std::string>();
        if (action == "accept") {
            e.cleaning_state = CleaningState::manually_reviewed;
            ++outcome.accepted;
        } else if (action == "edit") {
            e.answer = d.at("answer").get<std::string>();
            e.cleaning_state = CleaningState::manually_reviewed;
            ++outcome.edited;
        } else {
            ++outcome.skipped;
        }
    };

    std::ofstream log(progress_path, std::ios::app);
    if (!log) throw ValidationError("cannot open review progress file: " +
                                    progress_path.string());

    bool quit = false;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto& e = dataset[i];
        if (const auto it = decided.find(e.id); it != decided.end()) {
            apply(e, it->second);
            continue;
        }
        if (quit) continue;
        out << "[" << (i + 1) << "/" << dataset.size() << "] " << e.id << "\n"
            << "  passage: " << join_path(e.passage_path) << "\n"
            << "  Q: " << e.question << "\n"
            << "  A: " << e.answer.value_or("(none)") << "\n";
        for (;;) {
            out << "(a)ccept / (e)dit / (s)kip / (q)uit > " << std::flush;
            std::string line;
            if (!std::getline(in, line)) {
                quit = true;
                break;
            }
            const auto cmd = trim(line);
            Json d{{"id", e.id}, {"reviewer", reviewer}};
            if (cmd == "a") {
                d["action"] = "accept";
            } else if (cmd == "s") {
                d["action"] = "skip";
            } else if (cmd == "q") {
                quit = true;
                break;
            } else if (cmd == "e") {
                out << "new answer > " << std::flush;
                std::string answer;
                if (!std::getline(in, answer) || trim(answer).empty()) {
                    out << "empty answer; item not changed\n";
                    continue;
                }
                d["action"] = "edit";
                d["answer"] = std::string(trim(answer));
            } else {
                out << "unrecognized command '" << cmd << "'\n";
                continue;
            }
            log << d.dump() << "\n";
            log.flush();
            apply(e, d);
            break;
        }
    }
    outcome.completed = !quit;
    outcome.dataset = std::move(dataset);
    return outcome;
}

}  // namespace dgqa
