#pragma once

#include "fedbench/metrics.hpp"
#include "fedbench/model.hpp"
#include "fedbench/paradigms.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedbench {

// Server-side view of one client's round: scalars only, no example data.
struct UpdateSummary {
    std::size_t round = 0;
    int client_id = -1;
    double update_norm = 0.0;  // ||w_k - w_global|| (Euclidean)
    double train_loss_end = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

// K x K cosine similarities between client update vectors for one round.
// Zero-norm updates get similarity 0 everywhere (including the diagonal).
struct SimilarityMatrix {
    std::vector<int> client_ids;  // row/column order
    std::vector<double> values;   // row-major K x K

    double at(std::size_t i, std::size_t j) const { return values[i * client_ids.size() + j]; }
};

struct RoundDiagnostics {
    std::vector<UpdateSummary> summaries;
    SimilarityMatrix similarity;
};

RoundDiagnostics summarize_round(const ParamVector& global_before,
                                 const std::vector<ClientUpdate>& updates, std::size_t round);

struct OutlierPolicy {
    double z_threshold = 3.0;
};

struct OutlierFlag {
    int client_id = -1;
    std::string reason;
};

// Flags clients whose mean off-diagonal cosine similarity (averaged over
// rounds) or mean validation accuracy falls more than z_threshold robust
// standard deviations (median/MAD) below the cohort median. Needs at least
// 2 rounds of history and 3 clients.
std::vector<OutlierFlag> flag_outlier_clients(const std::vector<RoundDiagnostics>& history,
                                              const OutlierPolicy& policy);

// Per-client threshold -> Youden's J summary over a shared grid. Computed
// client-side; only these scalars travel to the server.
struct JCurve {
    int client_id = -1;
    std::vector<double> thresholds;
    std::vector<double> j_values;
};

JCurve compute_j_curve(const ParamVector& model, const PredictorSpec& spec,
                       const Dataset& validation, std::span<const double> grid, int client_id);

enum class AggregationRule { Mean, Median, WorstCase };

std::string aggregation_rule_name(AggregationRule rule);

struct ThresholdAggregate {
    double threshold = 0.0;
    double aggregate_j = 0.0;
};

// Pointwise mean/median/min of the curves followed by an argmax over the
// shared grid; ties break toward the smallest threshold.
ThresholdAggregate aggregate_thresholds(const std::vector<JCurve>& curves, AggregationRule rule);

// 101 evenly spaced points on [0, 1] by default.
std::vector<double> default_threshold_grid(std::size_t points = 101);

}  // namespace fedbench
