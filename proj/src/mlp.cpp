#include "softdistill/mlp.h"

#include <cmath>

#include "softdistill/errors.h"

namespace softdistill {

namespace {

void validate_spec(const MlpSpec& spec) {
    if (spec.input_dim <= 0) throw ShapeError("mlp: input_dim must be positive");
    if (spec.output_dim <= 0) throw ShapeError("mlp: output_dim must be positive");
    for (int h : spec.hidden)
        if (h <= 0) throw ShapeError("mlp: hidden widths must be positive");
}

}  // namespace

std::vector<std::pair<int, int>> layer_dims(const MlpSpec& spec) {
    validate_spec(spec);
    std::vector<std::pair<int, int>> dims;
    int fan_in = spec.input_dim;
    for (int h : spec.hidden) {
        dims.emplace_back(fan_in, h);
        fan_in = h;
    }
    dims.emplace_back(fan_in, spec.output_dim);
    return dims;
}

std::int64_t parameter_count(const MlpSpec& spec) {
    std::int64_t count = 0;
    for (auto [fan_in, fan_out] : layer_dims(spec))
        count += static_cast<std::int64_t>(fan_in) * fan_out + fan_out;
    return count;
}

ModelParams init_mlp(const MlpSpec& spec, Rng& rng) {
    ModelParams params;
    for (auto [fan_in, fan_out] : layer_dims(spec)) {
        const double bound = std::sqrt(6.0 / fan_in);
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& v : w) v = (2.0 * rng.next_unit() - 1.0) * bound;
        params.weights.push_back(Tensor::from_data({fan_in, fan_out}, w, /*requires_grad=*/true));
        params.biases.push_back(Tensor::zeros({fan_out}, /*requires_grad=*/true));
    }
    return params;
}

void set_requires_grad(ModelParams& params, bool value) {
    for (auto& w : params.weights) w.set_requires_grad(value);
    for (auto& b : params.biases) b.set_requires_grad(value);
}

Tensor forward(const ModelParams& params, const Tensor& x) {
    if (params.weights.empty() || params.weights.size() != params.biases.size())
        throw ShapeError("mlp: malformed parameter set");
    if (x.rank() != 2 || x.cols() != params.weights.front().rows())
        throw ShapeError("mlp: input shape does not match first layer");

    Tensor h = x;
    const std::size_t last = params.weights.size() - 1;
    for (std::size_t j = 0; j < params.weights.size(); ++j) {
        Tensor z = add_bias(matmul(h, params.weights[j]), params.biases[j]);
        h = (j == last) ? z : relu(z);
    }
    return h;
}

std::vector<double> frobenius_norms(const ModelParams& params) {
    std::vector<double> norms;
    norms.reserve(params.weights.size());
    for (const auto& w : params.weights) {
        double sq = 0.0;
        for (double v : w.values()) sq += v * v;
        norms.push_back(std::sqrt(sq));
    }
    return norms;
}

double generalization_bound_proxy(const ModelParams& params, std::int64_t m) {
    if (m <= 0) throw ShapeError("bound proxy: sample count must be positive");
    double proxy = 1.0;
    for (double norm : frobenius_norms(params)) proxy *= 2.0 * norm;
    return proxy / std::sqrt(static_cast<double>(m));
}

ModelParams clone_params(const ModelParams& params) {
    ModelParams copy;
    for (const auto& w : params.weights) {
        copy.weights.push_back(Tensor::from_data(
            w.shape(), std::vector<double>(w.values().begin(), w.values().end()),
            /*requires_grad=*/false));
    }
    for (const auto& b : params.biases) {
        copy.biases.push_back(Tensor::from_data(
            b.shape(), std::vector<double>(b.values().begin(), b.values().end()),
            /*requires_grad=*/false));
    }
    return copy;
}

MlpSpec spec_of(const ModelParams& params) {
    if (params.weights.empty()) throw ShapeError("mlp: empty parameter set");
    MlpSpec spec;
    spec.input_dim = params.weights.front().rows();
    for (std::size_t j = 0; j + 1 < params.weights.size(); ++j)
        spec.hidden.push_back(params.weights[j].cols());
    spec.output_dim = params.weights.back().cols();
    return spec;
}

}  // namespace softdistill
