#pragma once

#include <cstdint>
#include <vector>

#include "softdistill/rng.h"
#include "softdistill/tensor.h"

namespace softdistill {

// Fully connected ReLU network: input_dim -> hidden... -> output_dim.
// The final layer produces raw logits (no activation).
struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden;
    int output_dim = 0;

    bool operator==(const MlpSpec&) const = default;
};

struct ModelParams {
    std::vector<Tensor> weights;  // [fan_in x fan_out], row-major
    std::vector<Tensor> biases;   // [fan_out]
};

// (fan_in, fan_out) per layer, e.g. {32,{256,256},10} -> (32,256),(256,256),(256,10).
std::vector<std::pair<int, int>> layer_dims(const MlpSpec& spec);

std::int64_t parameter_count(const MlpSpec& spec);

// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)) drawn row-major per layer in
// order; biases start at zero. Consumes `rng` sequentially.
ModelParams init_mlp(const MlpSpec& spec, Rng& rng);

void set_requires_grad(ModelParams& params, bool value);

// x is [n x input_dim]; returns logits [n x output_dim]. Records on the tape
// when parameters (or x) require grad.
Tensor forward(const ModelParams& params, const Tensor& x);

// Per-layer Frobenius norms of the weight matrices; biases excluded.
std::vector<double> frobenius_norms(const ModelParams& params);

// 2^d * prod_j ||W_j||_F / sqrt(m) with d = number of layers.
double generalization_bound_proxy(const ModelParams& params, std::int64_t m);

// Deep value copy with requires_grad cleared; used for frozen teachers.
ModelParams clone_params(const ModelParams& params);

MlpSpec spec_of(const ModelParams& params);

}  // namespace softdistill
