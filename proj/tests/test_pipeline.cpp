#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "dgqa/pipeline.hpp"
#include "test_util.hpp"

using namespace dgqa;
using testutil::TempDir;

namespace {

/// Minimal config pointing at the fixture manual, writing into tmp.
PipelineConfig test_config(const TempDir& tmp, const std::string& out = "out",
                           const std::string& cache = "cache") {
    PipelineConfig c;
    c.corpus_path = testutil::fixture("mini_manual.json");
    c.output_dir = tmp / out;
    c.cache_dir = tmp / cache;
    c.mode = GatewayMode::record;
    c.concurrency = 2;
    c.pairs_per_section = 2;
    c.negative_count = 2;
    c.negatives_seed = 11;
    return c;
}

}  // namespace

TEST_CASE("pipeline config parses paths, roles, and modes") {
    TempDir tmp;
    const auto config_path = tmp / "pipeline.json";
    write_file(config_path, R"({
        "corpus": "manual.json",
        "output_dir": "artifacts",
        "cache_dir": "/abs/cache",
        "mode": "replay",
        "concurrency": 7,
        "pairs_per_section": 3,
        "negatives": 9,
        "seeds": {"negatives": 123},
        "score_pair_index": 1,
        "crowdsourced": {"path": "crowd.jsonl",
                         "split": {"train": 534, "dev": 100, "test": 50}},
        "roles": {
            "scorer": {"provider": "http", "model_id": "llama-2-7b",
                        "endpoint": "http://localhost:8000",
                        "supports_logprobs": true, "tokenizer": "llama/bpe"},
            "cleaner": {"model_id": "cleaner-v2"}
        }
    })");

    const auto c = load_pipeline_config(config_path);
    CHECK(c.corpus_path == tmp / "manual.json");             // relative to the config
    CHECK(c.output_dir == tmp / "artifacts");
    CHECK(c.cache_dir == std::filesystem::path("/abs/cache"));  // absolute kept as-is
    CHECK(c.mode == GatewayMode::replay);
    CHECK(c.concurrency == 7);
    CHECK(c.pairs_per_section == 3);
    CHECK(c.negative_count == 9);
    CHECK(c.negatives_seed == 123);
    CHECK(c.score_pair_index == 1);
    REQUIRE(c.crowdsourced.has_value());
    CHECK(c.crowdsourced->path == tmp / "crowd.jsonl");
    CHECK(c.crowdsourced->split.train == 534);
    CHECK(c.crowdsourced->split.dev == 100);
    CHECK(c.crowdsourced->split.test == 50);
    CHECK(c.roles.at("scorer").provider == "http");
    CHECK(c.roles.at("scorer").model_id == "llama-2-7b");
    CHECK(c.roles.at("scorer").tokenizer == "llama/bpe");
    CHECK(c.roles.at("cleaner").provider == "mock");  // default preserved
    CHECK(c.roles.at("cleaner").model_id == "cleaner-v2");

    CHECK_THROWS_AS(pipeline_config_from_json(Json{{"output_dir", "x"}}, "/base"),
                    ValidationError);
    CHECK_THROWS_AS(gateway_mode_from_string("offline"), ParseError);
    CHECK_THROWS_AS(make_provider(RoleConfig{"carrier-pigeon", "m"}), ValidationError);
}

TEST_CASE("pipeline rejects roles that cannot serve their stage") {
    TempDir tmp;
    auto config = test_config(tmp);
    RoleConfig no_logprobs;
    no_logprobs.supports_logprobs = false;
    config.roles["scorer"] = no_logprobs;
    CHECK_THROWS_AS(Pipeline(config), CapabilityError);

    auto config2 = test_config(tmp);
    RoleConfig no_embed;
    no_embed.supports_embeddings = false;
    config2.roles["embedder"] = no_embed;
    CHECK_THROWS_AS(Pipeline(config2), CapabilityError);
}

TEST_CASE("stages demand their inputs by name") {
    TempDir tmp;
    Pipeline pipeline(test_config(tmp));

    try {
        pipeline.run_stage("synth");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(e.required_stage == "ingest");
    }
    try {
        pipeline.run_stage("blend");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(e.required_stage == "score");
    }
    try {
        pipeline.run_stage("export");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(e.required_stage == "synth");
    }
    CHECK_THROWS_AS(pipeline.run_stage("polish"), ValidationError);
}

TEST_CASE("a full offline run produces every artifact, then goes idle") {
    TempDir tmp;
    const auto config = test_config(tmp);

    Pipeline first(config);
    const auto outcomes = first.run_all();
    REQUIRE(outcomes.size() == Pipeline::stage_names().size());
    for (const auto& o : outcomes) {
        INFO("stage " << o.stage);
        CHECK(o.ran);
    }

    const auto out = config.output_dir;
    const Corpus corpus = load_corpus(out / "ingest" / "corpus.json");
    CHECK(corpus.sections().size() == 12);

    const auto self = load_dataset(out / "synth" / "self.jsonl");
    const auto distill = load_dataset(out / "synth" / "distill.jsonl");
    CHECK(self.size() == 24);  // 12 sections x 2 pairs
    CHECK(distill.size() == 24);
    for (const auto& e : self) {
        CHECK(e.source == Source::synthetic_self);
        CHECK(e.id.rfind("synl-", 0) == 0);
        CHECK(e.answer.has_value());
    }
    CHECK(distill.front().id.rfind("syng-", 0) == 0);
    CHECK(distill.front().source == Source::synthetic_distill);

    const auto cleaned = load_dataset(out / "clean" / "cleaned.jsonl");
    CHECK(cleaned.size() == self.size());
    for (const auto& e : cleaned) CHECK(e.cleaning_state == CleaningState::cleaned);
    CHECK(load_jsonl(out / "clean" / "log.jsonl").size() == self.size());

    const auto with_negatives = load_dataset(out / "negatives" / "dataset.jsonl");
    CHECK(with_negatives.size() == cleaned.size() + config.negative_count);
    std::size_t negs = 0;
    for (const auto& e : with_negatives) negs += e.is_negative;
    CHECK(negs == config.negative_count);

    const auto records = load_perplexity_records(out / "score" / "perplexity.jsonl");
    CHECK(records.size() == 12);  // one per section
    for (const auto& r : records) {
        CHECK(r.pp_G > 0.0);
        CHECK(r.pp_L > 0.0);
        CHECK(r.delta_pp == Catch::Approx(r.pp_G - r.pp_L).margin(1e-12));
    }

    const auto best = load_dataset(out / "blend" / "best.jsonl");
    const auto worst = load_dataset(out / "blend" / "worst.jsonl");
    CHECK(best.size() == 12);
    CHECK(worst.size() == 12);
    // Complementary halves: per passage, the sides differ between modes.
    std::map<std::string, Source> best_side;
    for (const auto& e : best) best_side[join_path(e.passage_path)] = e.source;
    for (const auto& e : worst)
        CHECK(best_side.at(join_path(e.passage_path)) != e.source);
    const auto manifest = load_json(out / "blend" / "best_manifest.json");
    CHECK(manifest.at("from_G") == 6);
    CHECK(manifest.at("from_L") == 6);

    // Exported arms: one training file per available dataset.
    const auto arms = first.available_arms();
    REQUIRE(arms.size() == 6);  // no manual review dataset yet
    for (const auto& [arm, path] : arms) {
        const auto rows = load_sft(out / "export" / (arm + ".jsonl"));
        CHECK(rows.size() == load_dataset(path).size());
    }

    const auto evaluation = load_json(out / "evaluate" / "evaluation.json");
    for (const auto& [arm, path] : arms) {
        REQUIRE(evaluation.contains(arm));
        const auto& ev = evaluation.at(arm);
        CHECK(ev.at("diversity").at("distinct_1").get<double>() > 0.0);
        CHECK(ev.at("factscore").at("scored").get<std::size_t>() > 0);
    }
    // The negatives arm is the only one with refusal answers.
    CHECK(evaluation.at("synth-self-plus").at("factscore").at("refusals") ==
          config.negative_count);
    CHECK(evaluation.at("synth-self").at("factscore").at("refusals") == 0);

    const auto report = load_json(out / "report" / "report.json");
    // Every upstream build stage is summarized; the report stage itself
    // has no manifest until after report.json is written.
    CHECK(report.at("stages").size() == Pipeline::stage_names().size() - 1);
    CHECK(report.at("dataset_sizes").at("synth-self") == 24);
    CHECK(report.at("dataset_sizes").at("synth-self-plus") == 26);
    CHECK(report.contains("evaluation"));

    // A second pipeline over the same tree has nothing to do and makes
    // no provider calls.
    Pipeline second(config);
    const auto again = second.run_all();
    for (const auto& o : again) {
        INFO("stage " << o.stage);
        CHECK_FALSE(o.ran);
    }
    CHECK(second.outbound_calls() == 0);
}

TEST_CASE("parameter changes invalidate exactly the affected stages") {
    TempDir tmp;
    auto config = test_config(tmp);
    Pipeline(config).run_all();

    // Changing the negatives seed must re-run negatives (and anything
    // downstream of its output), but not ingest or synth.
    auto changed = config;
    changed.negatives_seed = 999;
    Pipeline pipeline(changed);
    CHECK_FALSE(pipeline.run_stage("ingest").ran);
    CHECK_FALSE(pipeline.run_stage("synth").ran);
    CHECK_FALSE(pipeline.run_stage("clean").ran);
    CHECK(pipeline.run_stage("negatives").ran);
}

TEST_CASE("replay mode reuses recorded traffic and never calls out") {
    TempDir tmp;
    auto config = test_config(tmp, "out-record", "shared-cache");
    Pipeline(config).run_all();

    // Fresh output tree, same cache, replay: everything runs again but
    // entirely from the recorded responses.
    auto replay_config = test_config(tmp, "out-replay", "shared-cache");
    replay_config.mode = GatewayMode::replay;
    Pipeline replayed(replay_config);
    for (const auto& o : replayed.run_all()) CHECK(o.ran);
    CHECK(replayed.outbound_calls() == 0);

    // Replay against an empty cache refuses to invent responses.
    auto cold_config = test_config(tmp, "out-cold", "empty-cache");
    cold_config.mode = GatewayMode::replay;
    Pipeline cold(cold_config);
    cold.run_stage("ingest");
    try {
        cold.run_stage("synth");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(e.required_stage == "record");
    }
}

TEST_CASE("cleaning targets the crowdsourced dataset when one is configured") {
    TempDir tmp;
    auto config = test_config(tmp);
    CrowdsourcedConfig crowd;
    crowd.path = tmp / "crowd-src.jsonl";  // unused by the clean stage itself
    crowd.split = {3, 0, 0, 1};
    config.crowdsourced = crowd;

    Pipeline pipeline(config);
    pipeline.run_stage("ingest");

    // The clean stage reads output_dir/crowd/dataset.jsonl.
    const Corpus corpus = testutil::mini_corpus();
    std::vector<QAExample> crowd_data;
    for (int i = 0; i < 3; ++i) {
        QAExample e;
        e.id = "crowd-" + std::to_string(i);
        e.question = "Crowd question " + std::to_string(i) + "?";
        e.passage_path = corpus.sections()[static_cast<std::size_t>(i)].path;
        e.answer = "Crowd answer " + std::to_string(i) + ".";
        e.source = Source::crowdsourced;
        crowd_data.push_back(std::move(e));
    }
    save_dataset(config.output_dir / "crowd" / "dataset.jsonl", crowd_data);

    CHECK(pipeline.run_stage("clean").ran);
    const auto cleaned = load_dataset(config.output_dir / "clean" / "cleaned.jsonl");
    REQUIRE(cleaned.size() == 3);
    for (const auto& e : cleaned) CHECK(e.id.rfind("crowd-", 0) == 0);

    // Without the crowd file the stage points at it by name.
    auto config2 = test_config(tmp, "out2");
    config2.crowdsourced = crowd;
    Pipeline missing(config2);
    missing.run_stage("ingest");
    CHECK_THROWS_AS(missing.run_stage("clean"), DependencyError);
}

TEST_CASE("review_loop records decisions and applies them to the dataset") {
    TempDir tmp;
    const Corpus corpus = testutil::mini_corpus();
    std::vector<QAExample> dataset;
    for (int i = 0; i < 3; ++i) {
        QAExample e;
        e.id = "rev-" + std::to_string(i);
        e.question = "Q" + std::to_string(i) + "?";
        e.passage_path = corpus.sections()[static_cast<std::size_t>(i)].path;
        e.answer = "Original answer " + std::to_string(i) + ".";
        dataset.push_back(std::move(e));
    }
    const auto progress = tmp / "progress.jsonl";

    std::istringstream in("a\ne\nA better answer.\ns\n");
    std::ostringstream out;
    const auto result = review_loop(dataset, progress, in, out, "tester");

    CHECK(result.completed);
    CHECK(result.accepted == 1);
    CHECK(result.edited == 1);
    CHECK(result.skipped == 1);
    CHECK(result.dataset[0].cleaning_state == CleaningState::manually_reviewed);
    CHECK(*result.dataset[1].answer == "A better answer.");
    CHECK(result.dataset[1].cleaning_state == CleaningState::manually_reviewed);
    CHECK(*result.dataset[2].answer == "Original answer 2.");
    CHECK(result.dataset[2].cleaning_state == CleaningState::raw);
    CHECK(out.str().find("(a)ccept / (e)dit / (s)kip / (q)uit >") != std::string::npos);

    // Every decision was persisted with its reviewer.
    const auto rows = load_jsonl(progress);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].at("action") == "accept");
    CHECK(rows[1].at("action") == "edit");
    CHECK(rows[1].at("answer") == "A better answer.");
    CHECK(rows[2].at("action") == "skip");
    for (const auto& r : rows) CHECK(r.at("reviewer") == "tester");

    // Resuming replays the saved decisions without asking anything.
    std::istringstream empty_in("");
    std::ostringstream quiet;
    const auto resumed = review_loop(dataset, progress, empty_in, quiet, "tester");
    CHECK(resumed.completed);
    CHECK(resumed.accepted == 1);
    CHECK(resumed.edited == 1);
    CHECK(resumed.skipped == 1);
    CHECK(*resumed.dataset[1].answer == "A better answer.");
    CHECK(quiet.str().empty());  // nothing left to review
}

TEST_CASE("review_loop handles quitting, retries, and bad input") {
    TempDir tmp;
    const Corpus corpus = testutil::mini_corpus();
    std::vector<QAExample> dataset;
    for (int i = 0; i < 3; ++i) {
        QAExample e;
        e.id = "rev-" + std::to_string(i);
        e.question = "Q?";
        e.passage_path = corpus.sections().front().path;
        e.answer = "A.";
        dataset.push_back(std::move(e));
    }

    // Unknown command, then an aborted edit, then accept; quit on item 2.
    const auto progress = tmp / "p1.jsonl";
    std::istringstream in("x\ne\n\na\nq\n");
    std::ostringstream out;
    const auto r = review_loop(dataset, progress, in, out, "t");
    CHECK_FALSE(r.completed);
    CHECK(r.accepted == 1);
    CHECK(r.edited == 0);
    CHECK(r.skipped == 0);
    CHECK(out.str().find("unrecognized command 'x'") != std::string::npos);
    CHECK(out.str().find("empty answer; item not changed") != std::string::npos);
    CHECK(load_jsonl(progress).size() == 1);

    // Resume after the quit: only the two undecided items come up.
    std::istringstream in2("a\na\n");
    std::ostringstream out2;
    const auto r2 = review_loop(dataset, progress, in2, out2, "t");
    CHECK(r2.completed);
    CHECK(r2.accepted == 3);
    CHECK(load_jsonl(progress).size() == 3);

    // EOF before any input quits immediately.
    const auto progress3 = tmp / "p3.jsonl";
    std::istringstream eof("");
    std::ostringstream out3;
    const auto r3 = review_loop(dataset, progress3, eof, out3, "t");
    CHECK_FALSE(r3.completed);
    CHECK(r3.accepted + r3.edited + r3.skipped == 0);
}

TEST_CASE("a reviewed dataset becomes an exportable arm") {
    TempDir tmp;
    const auto config = test_config(tmp);
    Pipeline pipeline(config);
    pipeline.run_stage("ingest");
    pipeline.run_stage("synth");

    auto arms = pipeline.available_arms();
    std::set<std::string> names;
    for (const auto& [arm, path] : arms) names.insert(arm);
    CHECK(names == std::set<std::string>{"synth-self", "synth-distill"});

    // Drop a reviewed dataset into place; it joins the arm list.
    const auto reviewed = load_dataset(config.output_dir / "synth" / "self.jsonl");
    save_dataset(config.output_dir / "review" / "dataset.jsonl", reviewed);
    arms = pipeline.available_arms();
    names.clear();
    for (const auto& [arm, path] : arms) names.insert(arm);
    CHECK(names == std::set<std::string>{"synth-self", "synth-distill", "manual"});

    CHECK(pipeline.run_stage("export").ran);
    CHECK(std::filesystem::exists(config.output_dir / "export" / "manual.jsonl"));
}
