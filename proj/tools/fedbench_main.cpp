#include "fedbench/config.hpp"
#include "fedbench/errors.hpp"
#include "fedbench/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the config's master seed");
    cmd->add_option("--out", opts.out_dir, "override the config's output directory");
}

fedbench::ExperimentConfig load(const CommonOptions& opts) {
    fedbench::ExperimentConfig config = fedbench::load_config(opts.config_path);
    if (opts.seed) config.master_seed = *opts.seed;
    if (opts.out_dir) config.output_dir = *opts.out_dir;
    fedbench::validate_config(config);  // before the sink creates output_dir
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated / centralized / local learning experiment harness"};
    app.require_subcommand(1);

    CommonOptions synth_opts, run_opts, eval_opts, stats_opts, monitor_opts, bench_opts;
    std::string paradigm = "all";

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic client cohort");
    add_common(synth, synth_opts);
    CLI::App* run = app.add_subcommand("run", "train the selected paradigm(s)");
    add_common(run, run_opts);
    run->add_option("--paradigm", paradigm, "ll|cl|fl|all")->default_val("all");
    CLI::App* evaluate = app.add_subcommand("evaluate", "two-level evaluation tables and ROC");
    add_common(evaluate, eval_opts);
    CLI::App* stats = app.add_subcommand("stats", "significance tests over the evaluations");
    add_common(stats, stats_opts);
    CLI::App* monitor = app.add_subcommand("monitor", "server-side federated diagnostics");
    add_common(monitor, monitor_opts);
    CLI::App* bench = app.add_subcommand("bench", "multi-seed paradigm-ordering benchmark");
    add_common(bench, bench_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto config = load(synth_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            fedbench::cmd_synth(config, sink, std::cout);
        } else if (run->parsed()) {
            auto config = load(run_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            fedbench::cmd_run(config, sink, fedbench::parse_paradigm_selection(paradigm),
                              std::cout);
        } else if (evaluate->parsed()) {
            auto config = load(eval_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            fedbench::cmd_evaluate(config, sink, std::cout);
        } else if (stats->parsed()) {
            auto config = load(stats_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            fedbench::cmd_stats(config, sink, std::cout);
        } else if (monitor->parsed()) {
            auto config = load(monitor_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            fedbench::cmd_monitor(config, sink, std::cout);
        } else if (bench->parsed()) {
            auto config = load(bench_opts);
            fedbench::ArtifactSink sink(config.output_dir);
            const auto outcome = fedbench::cmd_bench(config, sink, std::cout);
            if (!outcome.pass) return 3;
        }
    } catch (const fedbench::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
