#pragma once

#include "fedbench/dataset.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedbench {

enum class PredictorKind { Logistic, Mlp };

// Differentiable binary classifier: a bare logistic head or a relu MLP with a
// single-logit output.
struct PredictorSpec {
    PredictorKind kind = PredictorKind::Logistic;
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_sizes;  // empty for logistic
};

void validate_spec(const PredictorSpec& spec);

// (fan_in, fan_out) per linear layer, input to output.
std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const PredictorSpec& spec);

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;

    std::size_t count() const;
};

// Flat parameter storage plus a named-block layout. Weight blocks are
// row-major (out x in).
struct ParamVector {
    std::vector<double> values;
    std::vector<ParamBlock> layout;

    bool same_layout(const ParamVector& other) const;
    std::span<double> block(std::size_t index);
    std::span<const double> block(std::size_t index) const;
};

struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> features;  // row-major rows x cols
    std::vector<int> labels;
};

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices);
Batch full_batch(const Dataset& ds);

// Weights uniform in +-1/sqrt(fan_in), biases zero; deterministic in seed.
ParamVector init_params(const PredictorSpec& spec, std::uint64_t seed);

std::vector<double> forward_logits(const ParamVector& params, const PredictorSpec& spec,
                                   const Batch& batch);

double sigmoid(double z);
std::vector<double> predict_probabilities(const ParamVector& params, const PredictorSpec& spec,
                                          const Dataset& ds);

struct BceResult {
    double loss = 0.0;
    std::vector<double> dloss_dlogits;
};

// Mean of max(z,0) - z*y + log1p(exp(-|z|)); gradient (sigmoid(z) - y) / n.
BceResult bce_with_logits(std::span<const double> logits, std::span<const int> labels);

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

// Exact gradient of the mean BCE-with-logits loss w.r.t. every parameter.
LossAndGradient loss_and_gradient(const ParamVector& params, const PredictorSpec& spec,
                                  const Batch& batch);
std::vector<double> backward(const ParamVector& params, const PredictorSpec& spec,
                             const Batch& batch);

}  // namespace fedbench
