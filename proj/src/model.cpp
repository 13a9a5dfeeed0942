#include "fedbench/model.hpp"

#include "fedbench/errors.hpp"
#include "fedbench/rng.hpp"

#include <cmath>
#include <numeric>

namespace fedbench {

void validate_spec(const PredictorSpec& spec) {
    if (spec.input_dim < 1) {
        throw ValidationError("predictor: input_dim must be >= 1");
    }
    if (spec.kind == PredictorKind::Logistic && !spec.hidden_sizes.empty()) {
        throw ValidationError("predictor: logistic model must have no hidden layers");
    }
    for (std::size_t h : spec.hidden_sizes) {
        if (h < 1) {
            throw ValidationError("predictor: hidden sizes must be >= 1");
        }
    }
}

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const PredictorSpec& spec) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    std::size_t in = spec.input_dim;
    for (std::size_t h : spec.hidden_sizes) {
        dims.emplace_back(in, h);
        in = h;
    }
    dims.emplace_back(in, std::size_t{1});
    return dims;
}

std::size_t ParamBlock::count() const {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (values.size() != other.values.size() || layout.size() != other.layout.size()) {
        return false;
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (layout[i].name != other.layout[i].name || layout[i].shape != other.layout[i].shape ||
            layout[i].offset != other.layout[i].offset) {
            return false;
        }
    }
    return true;
}

std::span<double> ParamVector::block(std::size_t index) {
    const ParamBlock& b = layout.at(index);
    return {values.data() + b.offset, b.count()};
}

std::span<const double> ParamVector::block(std::size_t index) const {
    const ParamBlock& b = layout.at(index);
    return {values.data() + b.offset, b.count()};
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
    Batch batch;
    batch.rows = indices.size();
    batch.cols = ds.dim;
    batch.features.resize(batch.rows * batch.cols);
    batch.labels.resize(batch.rows);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Example& e = ds.examples[indices[r]];
        std::copy(e.features.begin(), e.features.end(), batch.features.begin() + r * batch.cols);
        batch.labels[r] = e.label;
    }
    return batch;
}

Batch full_batch(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return make_batch(ds, idx);
}

ParamVector init_params(const PredictorSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    ParamVector p;
    std::size_t offset = 0;
    const auto dims = layer_dims(spec);
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [in, out] = dims[l];
        const std::string tag = std::to_string(l);
        p.layout.push_back({"w" + tag, {out, in}, offset});
        offset += out * in;
        p.layout.push_back({"b" + tag, {out}, offset});
        offset += out;
    }
    p.values.assign(offset, 0.0);

    Rng rng(derive_seed(seed, "init"));
    for (std::size_t bi = 0; bi < p.layout.size(); bi += 2) {
        const auto [out, in] = std::pair{p.layout[bi].shape[0], p.layout[bi].shape[1]};
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        auto w = p.block(bi);
        for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * bound;
        // bias block stays zero
    }
    return p;
}

namespace {

// Forward pass keeping post-activation values per layer for backprop.
// activations[0] is the input; activations[l+1] the output of layer l
// (relu applied on hidden layers, raw logit on the last).
std::vector<std::vector<double>> forward_pass(const ParamVector& params,
                                              const PredictorSpec& spec, const Batch& batch) {
    if (batch.cols != spec.input_dim) {
        throw ComputeError("forward: batch has dimension " + std::to_string(batch.cols) +
                           ", spec expects " + std::to_string(spec.input_dim));
    }
    const auto dims = layer_dims(spec);
    std::vector<std::vector<double>> activations(dims.size() + 1);
    activations[0] = batch.features;

    const std::size_t rows = batch.rows;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [in, out] = dims[l];
        const auto w = params.block(2 * l);
        const auto b = params.block(2 * l + 1);
        const bool last = l + 1 == dims.size();
        std::vector<double>& y = activations[l + 1];
        y.assign(rows * out, 0.0);
        const std::vector<double>& x = activations[l];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out; ++o) {
                double acc = b[o];
                const double* wrow = w.data() + o * in;
                const double* xrow = x.data() + r * in;
                for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * xrow[i];
                y[r * out + o] = last ? acc : (acc > 0.0 ? acc : 0.0);
            }
        }
    }
    return activations;
}

}  // namespace

std::vector<double> forward_logits(const ParamVector& params, const PredictorSpec& spec,
                                   const Batch& batch) {
    auto activations = forward_pass(params, spec, batch);
    return std::move(activations.back());
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> predict_probabilities(const ParamVector& params, const PredictorSpec& spec,
                                          const Dataset& ds) {
    auto logits = forward_logits(params, spec, full_batch(ds));
    for (double& z : logits) z = sigmoid(z);
    return logits;
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const int> labels) {
    if (logits.empty()) {
        throw ValidationError("bce_with_logits: empty input");
    }
    if (logits.size() != labels.size()) {
        throw ComputeError("bce_with_logits: length mismatch");
    }
    const double n = static_cast<double>(logits.size());
    BceResult out;
    out.dloss_dlogits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = static_cast<double>(labels[i]);
        out.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        out.dloss_dlogits[i] = (sigmoid(z) - y) / n;
    }
    out.loss /= n;
    return out;
}

LossAndGradient loss_and_gradient(const ParamVector& params, const PredictorSpec& spec,
                                  const Batch& batch) {
    const auto dims = layer_dims(spec);
    const auto activations = forward_pass(params, spec, batch);
    const auto bce = bce_with_logits(activations.back(), batch.labels);

    LossAndGradient out;
    out.loss = bce.loss;
    out.gradient.assign(params.values.size(), 0.0);

    const std::size_t rows = batch.rows;
    std::vector<double> delta = bce.dloss_dlogits;  // d loss / d layer-output
    for (std::size_t l = dims.size(); l-- > 0;) {
        const auto [in, out_dim] = dims[l];
        const auto w = params.block(2 * l);
        const std::vector<double>& x = activations[l];
        double* gw = out.gradient.data() + params.layout[2 * l].offset;
        double* gb = out.gradient.data() + params.layout[2 * l + 1].offset;

        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double d = delta[r * out_dim + o];
                if (d == 0.0) continue;
                gb[o] += d;
                double* gwrow = gw + o * in;
                const double* xrow = x.data() + r * in;
                for (std::size_t i = 0; i < in; ++i) gwrow[i] += d * xrow[i];
            }
        }

        if (l == 0) break;
        std::vector<double> prev(rows * in, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t i = 0; i < in; ++i) {
                // relu gate: activations[l] holds post-relu values
                if (x[r * in + i] <= 0.0) continue;
                double acc = 0.0;
                for (std::size_t o = 0; o < out_dim; ++o) {
                    acc += delta[r * out_dim + o] * w[o * in + i];
                }
                prev[r * in + i] = acc;
            }
        }
        delta = std::move(prev);
    }
    return out;
}

std::vector<double> backward(const ParamVector& params, const PredictorSpec& spec,
                             const Batch& batch) {
    return loss_and_gradient(params, spec, batch).gradient;
}

}  // namespace fedbench
