#pragma once

#include "fedbench/artifacts.hpp"
#include "fedbench/config.hpp"
#include "fedbench/dataset.hpp"
#include "fedbench/evaluate.hpp"
#include "fedbench/paradigms.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace fedbench {

// Deterministic pipeline pieces shared by the CLI commands; everything is a
// pure function of the config (and its master seed).
std::map<int, Dataset> make_cohort(const ExperimentConfig& config);
SplitLayout make_layout(const ExperimentConfig& config, const std::map<int, Dataset>& cohort);

enum class ParadigmSelection { Ll, Cl, Fl, All };
ParadigmSelection parse_paradigm_selection(const std::string& name);

struct TrainedParadigms {
    ParadigmModels models;
    std::map<int, LocalTrainResult> local_results;
    TrainingRunRecord cl_record;
    FederatedRunResult fl;
};

TrainedParadigms train_paradigms(const ExperimentConfig& config, const SplitLayout& layout,
                                 ParadigmSelection selection);

// Command bodies. Each writes its artifacts through the sink (plus a
// manifest) and human-readable output to `out`.
void cmd_synth(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out);
void cmd_run(const ExperimentConfig& config, ArtifactSink& sink, ParadigmSelection selection,
             std::ostream& out);
TwoLevelEvaluation cmd_evaluate(const ExperimentConfig& config, ArtifactSink& sink,
                                std::ostream& out);
SignificanceTable cmd_stats(const ExperimentConfig& config, ArtifactSink& sink,
                            std::ostream& out);
void cmd_monitor(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out);

struct BenchSeedResult {
    std::uint64_t seed = 0;
    double auc_cl = 0.0;
    double auc_fl = 0.0;
    double auc_mean_ll = 0.0;
};

struct BenchOutcome {
    std::vector<BenchSeedResult> per_seed;
    double median_cl = 0.0;
    double median_fl = 0.0;
    double median_mean_ll = 0.0;
    bool pass = false;  // median CL >= median FL >= median mean-LL
};

BenchOutcome cmd_bench(const ExperimentConfig& config, ArtifactSink& sink, std::ostream& out);

}  // namespace fedbench
