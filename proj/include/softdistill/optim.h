#pragma once

#include <vector>

#include "softdistill/mlp.h"

namespace softdistill {

// Momentum buffers aligned with a ModelParams: weights first, then biases.
struct OptimState {
    double momentum = 0.9;
    std::vector<std::vector<double>> velocity;
};

OptimState make_optim_state(const ModelParams& params, double momentum);

// v <- mu*v + (grad + weight_decay*w); w <- w - lr*v. Weight decay applies to
// weight matrices only; biases are exempt. Throws if any gradient is missing.
void sgd_momentum_step(ModelParams& params, OptimState& state, double lr, double weight_decay);

void zero_grad(ModelParams& params);

}  // namespace softdistill
