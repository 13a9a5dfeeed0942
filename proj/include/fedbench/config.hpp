#pragma once

#include "fedbench/dataset.hpp"
#include "fedbench/model.hpp"
#include "fedbench/paradigms.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fedbench {

// One client entry in the cohort section. The domain shift is either an
// explicit vector or drawn as N(0, feature_shift_scale^2) per dimension from
// a stream keyed by (master_seed, client_id).
struct ClientSpecConfig {
    int client_id = 0;
    std::size_t n_total = 0;
    double overlap_fraction = 0.0;
    std::vector<double> feature_shift;
    double feature_shift_scale = 0.0;
    double label_noise_rate = 0.0;
};

struct CohortConfig {
    std::size_t dim = 16;
    double cluster_margin = 2.0;
    std::vector<ClientSpecConfig> clients;
};

struct SplitConfig {
    double test_fraction = 0.10;
    double validation_total_fraction = 0.10;
};

struct EvalConfig {
    std::size_t threshold_grid_points = 101;
};

struct MonitorConfig {
    double z_threshold = 3.0;
};

struct BenchConfig {
    std::size_t seeds = 5;
};

struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    CohortConfig cohort;
    PredictorSpec model;  // input_dim filled from cohort.dim
    TrainConfig train;
    RoundConfig rounds;
    SplitConfig splits;
    EvalConfig eval;
    MonitorConfig monitor;
    BenchConfig bench;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// JSON with one named section per component. parse(serialize(c)) == c.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// Field-level validation; warns on stderr when rounds * local_epochs differs
// from the LL/CL epoch budget.
void validate_config(const ExperimentConfig& config);

// Materializes ClientSpecs, drawing generated feature shifts from the master
// seed.
std::vector<ClientSpec> resolve_client_specs(const CohortConfig& cohort,
                                             std::uint64_t master_seed);

std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace fedbench
