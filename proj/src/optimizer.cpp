#include "fedbench/optimizer.hpp"

#include "fedbench/errors.hpp"

#include <cmath>

namespace fedbench {

OptimizerState make_optimizer_state(std::size_t n_params, double lr, double weight_decay,
                                    double beta1, double beta2, double epsilon) {
    OptimizerState s;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    s.lr = lr;
    s.weight_decay = weight_decay;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

void adamw_step(OptimizerState& state, ParamVector& params, const std::vector<double>& grad) {
    if (grad.size() != params.values.size() || state.m.size() != grad.size()) {
        throw ComputeError("adamw_step: size mismatch");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) {
            throw ComputeError("adamw_step: non-finite gradient entry");
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon) +
                            state.lr * state.weight_decay * params.values[i];
    }
}

}  // namespace fedbench
