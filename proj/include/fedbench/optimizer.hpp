#pragma once

#include "fedbench/model.hpp"

#include <cstdint>
#include <vector>

namespace fedbench {

// Adam moments with decoupled weight decay.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double lr = 1e-4;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimizerState make_optimizer_state(std::size_t n_params, double lr, double weight_decay,
                                    double beta1 = 0.9, double beta2 = 0.999,
                                    double epsilon = 1e-8);

// One AdamW update:
//   m' = b1 m + (1-b1) g,  v' = b2 v + (1-b2) g^2,  t' = t+1
//   params -= lr * mhat / (sqrt(vhat) + eps) + lr * weight_decay * params
// with bias-corrected mhat, vhat. Throws on non-finite gradient entries.
void adamw_step(OptimizerState& state, ParamVector& params, const std::vector<double>& grad);

}  // namespace fedbench
