#pragma once

#include "fedbench/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fedbench {

// Rounding rule for all split/count arithmetic: half away from zero.
std::int64_t round_half_away(double x);

// Synthesizes one dataset per client. Features come from two Gaussian
// clusters whose means are cluster_margin apart; the client's feature_shift
// is added to every example. Positive count is round(n_total *
// overlap_fraction) exactly. A label_noise_rate fraction of examples draw
// their features from the cluster of the opposite class, which models
// annotation noise while keeping the class counts exact.
std::map<int, Dataset> generate_cohort(const std::vector<ClientSpec>& specs, std::size_t dim,
                                       std::uint64_t seed, double cluster_margin = 2.0);

// Concatenates per-client datasets (ascending client id) into one pool,
// stamping origin_client so redistribute_by_origin is an exact inverse.
Dataset pool_clients(const std::map<int, Dataset>& clients);
std::map<int, Dataset> redistribute_by_origin(const Dataset& pooled);

struct TestSplit {
    Dataset test;
    Dataset remainder;  // keeps origin_client tags
};

// Per-class test counts are round(fraction * class count) exactly; selection
// is uniform within class. Single-class input throws unless allow_unstratified
// is set, in which case the sample is drawn from the pool as a whole.
TestSplit stratified_test_split(const Dataset& pooled, double fraction, std::uint64_t seed,
                                bool allow_unstratified = false);

// Splits each client's post-test pool into train and validation. The
// validation fraction is target_total_fraction / (1 - test_fraction), applied
// per class with rounding, so that summed validation counts come to about
// target_total_fraction of the original pooled size. Each class keeps at
// least one example on both sides, hence the two-per-class precondition.
// The returned layout's test set is empty; callers fill it.
SplitLayout per_client_validation_split(const std::map<int, Dataset>& remainder,
                                        double target_total_fraction, double test_fraction,
                                        std::uint64_t seed);

// Upsamples the minority class to exact parity by drawing minority examples
// with replacement and adding Gaussian jitter of scale policy.jitter_scale.
// Copy item_index's source pick and perturbation depend only on (base_seed,
// epoch_index / regenerate_every, item_index), so the augmented set is stable
// within a regeneration window and refreshed across windows. Originals pass
// through unmodified.
Dataset rebalance_minority(const Dataset& train, const RebalancePolicy& policy,
                           std::size_t epoch_index, std::uint64_t base_seed);

struct PredictionFile {
    std::vector<double> scores;
    std::vector<int> labels;
    std::string model_tag;     // file stem
    bool logit_scores = false;  // header declared raw logits instead of probabilities
};

// Reads a `score,label` file (optional header `score,label` or `logit,label`).
// Parse failures name the 1-based line number.
PredictionFile load_predictions(const std::string& path);

}  // namespace fedbench
