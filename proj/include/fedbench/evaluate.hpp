#pragma once

#include "fedbench/dataset.hpp"
#include "fedbench/metrics.hpp"
#include "fedbench/model.hpp"
#include "fedbench/stats.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fedbench {

// Final models of the three paradigms over one cohort.
struct ParadigmModels {
    PredictorSpec spec;
    std::map<int, ParamVector> local;  // client id -> LL_k
    std::optional<ParamVector> centralized;
    std::optional<ParamVector> federated;
};

struct EvalRow {
    std::string model;   // "cl", "fl", "ll_<k>"
    int client_id = -1;  // evaluation client for local tables, -1 for pooled
    MetricReport metrics;
};

struct EvaluationTable {
    std::string name;
    std::vector<EvalRow> rows;
};

struct ModelScores {
    std::vector<double> scores;  // probabilities
    std::vector<int> labels;
};

// The two-level evaluation products: per-client validation tables for each
// paradigm (thresholds optimized on that client's local training data) and
// the pooled-test table (CL/FL calibrated on pooled train+validation, each
// LL_k on its own train+validation). Raw score vectors are kept for the
// significance tests.
struct TwoLevelEvaluation {
    EvaluationTable local_ll;
    EvaluationTable local_cl;
    EvaluationTable local_fl;
    EvaluationTable pooled_test;
    std::map<std::string, ModelScores> test_scores;
    std::map<std::string, std::map<int, ModelScores>> validation_scores;
};

TwoLevelEvaluation two_level_evaluate(const ParadigmModels& models, const SplitLayout& layout,
                                      const Dataset& test);

// Extracts the inputs the significance machinery needs.
ModelEvaluations to_model_evaluations(const TwoLevelEvaluation& evaluation);

}  // namespace fedbench
