#include "softdistill/optim.h"

#include <stdexcept>

#include "softdistill/errors.h"

namespace softdistill {

namespace {

void step_tensor(Tensor& param, std::vector<double>& velocity, double mu, double lr,
                 double decay) {
    auto grad = param.grad();
    if (grad.empty()) throw std::logic_error("sgd step: parameter has no gradient");
    auto w = param.mutable_values();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double g_eff = grad[i] + decay * w[i];
        velocity[i] = mu * velocity[i] + g_eff;
        w[i] -= lr * velocity[i];
    }
}

}  // namespace

OptimState make_optim_state(const ModelParams& params, double momentum) {
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
    OptimState state;
    state.momentum = momentum;
    for (const auto& w : params.weights) state.velocity.emplace_back(w.numel(), 0.0);
    for (const auto& b : params.biases) state.velocity.emplace_back(b.numel(), 0.0);
    return state;
}

void sgd_momentum_step(ModelParams& params, OptimState& state, double lr, double weight_decay) {
    if (lr < 0.0) throw std::invalid_argument("sgd: learning rate must be nonnegative");
    if (weight_decay < 0.0) throw std::invalid_argument("sgd: weight decay must be nonnegative");
    const std::size_t n_layers = params.weights.size();
    if (state.velocity.size() != n_layers + params.biases.size())
        throw ShapeError("sgd: optimizer state does not match parameters");

    for (std::size_t j = 0; j < n_layers; ++j)
        step_tensor(params.weights[j], state.velocity[j], state.momentum, lr, weight_decay);
    for (std::size_t j = 0; j < params.biases.size(); ++j)
        step_tensor(params.biases[j], state.velocity[n_layers + j], state.momentum, lr, 0.0);
}

void zero_grad(ModelParams& params) {
    for (auto& w : params.weights) w.zero_grad();
    for (auto& b : params.biases) b.zero_grad();
}

}  // namespace softdistill
