#pragma once

#include <cstdint>
#include <cstddef>
#include <map>
#include <vector>

namespace fedbench {

// One labeled feature vector. Ids are stable across splitting and pooling so
// disjointness and conservation can be checked; origin_client records which
// client held the example before pooling (-1 when unknown).
struct Example {
    std::int64_t id = 0;
    int label = 0;  // 0 = no-overlap, 1 = overlap
    int origin_client = -1;
    std::vector<double> features;
};

struct Dataset {
    std::size_t dim = 0;
    std::vector<Example> examples;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
    std::size_t count_label(int label) const;
    std::size_t positives() const { return count_label(1); }
    std::size_t negatives() const { return count_label(0); }
};

// Throws ValidationError when an example has the wrong dimension, a non-finite
// feature, or a label outside {0, 1}.
void validate_dataset(const Dataset& ds);

// Target distribution for one synthetic client.
struct ClientSpec {
    int client_id = 0;
    std::size_t n_total = 0;
    double overlap_fraction = 0.0;      // target positive-class share
    std::vector<double> feature_shift;  // per-client domain offset; empty = zero
    double label_noise_rate = 0.0;      // in [0, 0.5)
};

struct ClientSplit {
    Dataset train;
    Dataset validation;
};

struct SplitLayout {
    Dataset test;  // pooled, class-stratified
    std::map<int, ClientSplit> per_client;
};

struct RebalancePolicy {
    std::size_t regenerate_every = 2;  // epochs between augmented-set refreshes
    double jitter_scale = 0.1;         // stddev of additive feature noise
    bool enabled = true;
};

}  // namespace fedbench
