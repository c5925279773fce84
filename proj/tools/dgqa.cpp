// Command-line front end for the QA data pipeline: run stages, validate
// datasets, and review answers interactively.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgqa/dgqa.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;  // bad input, bad config, bad data
constexpr int kExitDependency = 2;  // a required prior stage has not run
constexpr int kExitProvider = 3;    // model backend failed or is misconfigured

struct RunOptions {
    std::string config_path;
    std::string output_override;
    std::vector<std::string> stages;
    bool replay = false;
    bool offline = false;
    std::int64_t negatives_seed = -1;
};

dgqa::PipelineConfig load_config(const RunOptions& opt) {
    auto config = dgqa::load_pipeline_config(opt.config_path);
    if (!opt.output_override.empty()) config.output_dir = opt.output_override;
    if (opt.replay) config.mode = dgqa::GatewayMode::replay;
    if (opt.negatives_seed >= 0)
        config.negatives_seed = static_cast<std::uint64_t>(opt.negatives_seed);
    if (opt.offline && config.mode != dgqa::GatewayMode::replay) {
        for (const auto& [name, role] : config.roles)
            if (role.provider != "mock")
                throw dgqa::ValidationError(
                    "--offline requires replay mode or mock-only roles; role '" + name +
                    "' uses provider '" + role.provider + "'");
    }
    return config;
}

int cmd_run(const RunOptions& opt) {
    dgqa::Pipeline pipeline(load_config(opt));
    const auto stages = opt.stages.empty() ? dgqa::Pipeline::stage_names() : opt.stages;
    for (const auto& name : stages) {
        const auto outcome = pipeline.run_stage(name);
        std::cout << "stage " << outcome.stage << ": "
                  << (outcome.ran ? "ran" : "up-to-date") << "\n";
    }
    if (pipeline.config().mode == dgqa::GatewayMode::replay &&
        pipeline.outbound_calls() != 0)
        throw dgqa::ProviderError("replay run produced outbound provider calls");
    std::cout << "outbound provider calls: " << pipeline.outbound_calls() << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path, const std::string& dataset_path) {
    const auto config = dgqa::load_pipeline_config(config_path);
    const auto corpus = dgqa::load_corpus(config.corpus_path);
    const auto dataset = dgqa::load_dataset(dataset_path);
    const auto report = dgqa::validate_dataset(dataset, corpus);
    std::cout << report.to_json().dump(2) << "\n";
    return report.ok() ? kExitOk : kExitValidation;
}

int cmd_review(const std::string& config_path, const std::string& dataset_path,
               const std::string& out_path, const std::string& progress_path,
               const std::string& reviewer) {
    const auto config = dgqa::load_pipeline_config(config_path);
    const auto review_dir = config.output_dir / "review";
    std::filesystem::create_directories(review_dir);
    const std::filesystem::path progress =
        progress_path.empty() ? review_dir / "progress.jsonl"
                              : std::filesystem::path(progress_path);
    const std::filesystem::path out =
        out_path.empty() ? review_dir / "dataset.jsonl" : std::filesystem::path(out_path);

    auto dataset = dgqa::load_dataset(dataset_path);
    const auto outcome =
        dgqa::review_loop(std::move(dataset), progress, std::cin, std::cout, reviewer);
    dgqa::save_dataset(out, outcome.dataset);
    std::cout << "reviewed dataset written to " << out.string() << "\n"
              << "accepted " << outcome.accepted << ", edited " << outcome.edited
              << ", skipped " << outcome.skipped
              << (outcome.completed ? "" : " (session ended early; rerun to resume)")
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Build, clean, select, and evaluate document-grounded QA training data"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run pipeline stages (all by default)");
    run->add_option("--config", run_opt.config_path, "Pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--output", run_opt.output_override, "Override the output directory");
    run->add_option("--seed", run_opt.negatives_seed,
                    "Override the negative-sampling seed");
    run->add_option("stages", run_opt.stages, "Stages to run, in order");
    run->add_flag("--replay", run_opt.replay,
                  "Serve every model call from the request cache; fail on any miss");
    run->add_flag("--offline", run_opt.offline,
                  "Refuse configurations that could produce network traffic");

    std::string v_config, v_dataset;
    auto* validate = app.add_subcommand("validate", "Validate a QA dataset file");
    validate->add_option("--config", v_config, "Pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    validate->add_option("--dataset", v_dataset, "Dataset JSONL to check")
        ->required()
        ->check(CLI::ExistingFile);

    std::string r_config, r_dataset, r_out, r_progress, r_reviewer = "anonymous";
    auto* review = app.add_subcommand("review", "Review answers interactively");
    review->add_option("--config", r_config, "Pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    review->add_option("--dataset", r_dataset, "Dataset JSONL to review")
        ->required()
        ->check(CLI::ExistingFile);
    review->add_option("--out", r_out, "Where to write the reviewed dataset");
    review->add_option("--progress", r_progress, "Progress file (default: <output>/review/progress.jsonl)");
    review->add_option("--reviewer", r_reviewer, "Name recorded with each decision");

    auto* stages = app.add_subcommand("stages", "List pipeline stages in run order");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (validate->parsed()) return cmd_validate(v_config, v_dataset);
        if (review->parsed())
            return cmd_review(r_config, r_dataset, r_out, r_progress, r_reviewer);
        if (stages->parsed()) {
            for (const auto& s : dgqa::Pipeline::stage_names()) std::cout << s << "\n";
            return kExitOk;
        }
    } catch (const dgqa::DependencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDependency;
    } catch (const dgqa::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dgqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
