#include "softdistill/tensor.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace softdistill {

namespace {

thread_local Tape t_tape;

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

void check_finite(std::span<const double> vals, const char* what) {
    for (double v : vals) {
        if (!std::isfinite(v)) throw NonFiniteError(std::string(what) + ": non-finite value");
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, OpKind kind) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op_name(kind)) + ": operand shapes differ");
}

// C (m x n) += or = A (m x k) * B (k x n), row-major. ikj order so the inner
// loop runs over contiguous rows of B and C.
void matmul_values(const double* a, const double* b, double* c, int m, int k, int n) {
    std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double ail = arow[l];
            const double* brow = b + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += ail * brow[j];
        }
    }
}

// dA (m x k) += g (m x n) * B^T; row-dot formulation, contiguous in j.
void matmul_grad_a(const double* g, const double* b, double* da, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* grow = g + static_cast<std::size_t>(i) * n;
        double* darow = da + static_cast<std::size_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const double* brow = b + static_cast<std::size_t>(l) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            darow[l] += acc;
        }
    }
}

// dB (k x n) += A^T * g; axpy rows of g scaled by A[i,l].
void matmul_grad_b(const double* a, const double* g, double* db, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        const double* grow = g + static_cast<std::size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double ail = arow[l];
            double* dbrow = db + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += ail * grow[j];
        }
    }
}

}  // namespace

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::kAdd: return "add";
        case OpKind::kSub: return "sub";
        case OpKind::kMul: return "mul";
        case OpKind::kMatMul: return "matmul";
        case OpKind::kRelu: return "relu";
        case OpKind::kExp: return "exp";
        case OpKind::kLog: return "log";
        case OpKind::kSum: return "sum";
        case OpKind::kMean: return "mean";
        case OpKind::kScale: return "scale";
        case OpKind::kAddBias: return "add_bias";
        case OpKind::kLogSoftmax: return "log_softmax";
    }
    return "?";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto impl = std::make_shared<detail::TensorImpl>();
    const auto n = shape_numel(shape);
    if (n < 1 || shape.empty() || shape.size() > 2)
        throw ShapeError("tensor shape must be rank 1 or 2 with positive dims");
    impl->shape = std::move(shape);
    impl->values.assign(static_cast<std::size_t>(n), 0.0);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.empty() || shape.size() > 2) throw ShapeError("tensor shape must be rank 1 or 2");
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw ShapeError("tensor data length does not match shape");
    check_finite(values, "tensor");
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

double Tensor::value() const {
    if (numel() != 1) throw ShapeError("value() requires a scalar tensor");
    return impl_->values[0];
}

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw std::logic_error("tensor has no gradient yet");
    return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
}

Tape& active_tape() { return t_tape; }
void tape_reset() { t_tape.clear(); }
std::size_t tape_size() { return t_tape.size(); }

Tensor apply_primitive(OpKind kind, std::span<const Tensor> operands, double attr) {
    const bool binary = kind == OpKind::kAdd || kind == OpKind::kSub || kind == OpKind::kMul ||
                        kind == OpKind::kMatMul || kind == OpKind::kAddBias;
    if (operands.size() != (binary ? 2u : 1u))
        throw ShapeError(std::string(op_name(kind)) + ": wrong operand count");
    auto unary_in = [&]() -> const Tensor& { return operands[0]; };

    Tensor out;
    switch (kind) {
        case OpKind::kAdd:
        case OpKind::kSub:
        case OpKind::kMul: {
            const Tensor& a = operands[0];
            const Tensor& b = operands[1];
            check_same_shape(a, b, kind);
            out = Tensor::zeros(a.shape());
            auto ov = out.mutable_values();
            auto av = a.values();
            auto bv = b.values();
            for (std::size_t i = 0; i < ov.size(); ++i) {
                ov[i] = kind == OpKind::kAdd   ? av[i] + bv[i]
                        : kind == OpKind::kSub ? av[i] - bv[i]
                                               : av[i] * bv[i];
            }
            break;
        }
        case OpKind::kMatMul: {
            const Tensor& a = operands[0];
            const Tensor& b = operands[1];
            if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
                throw ShapeError("matmul: need (m x k) * (k x n)");
            out = Tensor::zeros({a.rows(), b.cols()});
            matmul_values(a.values().data(), b.values().data(), out.mutable_values().data(),
                          a.rows(), a.cols(), b.cols());
            break;
        }
        case OpKind::kRelu: {
            const Tensor& x = unary_in();
            out = Tensor::zeros(x.shape());
            auto ov = out.mutable_values();
            auto xv = x.values();
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
            break;
        }
        case OpKind::kExp: {
            const Tensor& x = unary_in();
            out = Tensor::zeros(x.shape());
            auto ov = out.mutable_values();
            auto xv = x.values();
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::exp(xv[i]);
            break;
        }
        case OpKind::kLog: {
            const Tensor& x = unary_in();
            out = Tensor::zeros(x.shape());
            auto ov = out.mutable_values();
            auto xv = x.values();
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(xv[i]);
            break;
        }
        case OpKind::kSum:
        case OpKind::kMean: {
            const Tensor& x = unary_in();
            double acc = 0.0;
            for (double v : x.values()) acc += v;
            if (kind == OpKind::kMean) acc /= static_cast<double>(x.numel());
            out = Tensor::zeros({1});
            out.mutable_values()[0] = acc;
            break;
        }
        case OpKind::kScale: {
            const Tensor& x = unary_in();
            out = Tensor::zeros(x.shape());
            auto ov = out.mutable_values();
            auto xv = x.values();
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = attr * xv[i];
            break;
        }
        case OpKind::kAddBias: {
            const Tensor& x = operands[0];
            const Tensor& b = operands[1];
            if (x.rank() != 2 || b.rank() != 1 || b.cols() != x.cols())
                throw ShapeError("add_bias: need (n x k) + (k)");
            out = Tensor::zeros(x.shape());
            auto ov = out.mutable_values();
            auto xv = x.values();
            auto bv = b.values();
            const int n = x.rows(), k = x.cols();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < k; ++j)
                    ov[static_cast<std::size_t>(i) * k + j] = xv[static_cast<std::size_t>(i) * k + j] + bv[j];
            break;
        }
        case OpKind::kLogSoftmax: {
            const Tensor& z = unary_in();
            if (z.rank() != 2 || z.cols() < 2) throw ShapeError("log_softmax: need (n x K) with K >= 2");
            out = Tensor::zeros(z.shape());
            auto ov = out.mutable_values();
            auto zv = z.values();
            const int n = z.rows(), k = z.cols();
            for (int i = 0; i < n; ++i) {
                const double* row = zv.data() + static_cast<std::size_t>(i) * k;
                double* orow = ov.data() + static_cast<std::size_t>(i) * k;
                double mx = row[0];
                for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
                double denom = 0.0;
                for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
                const double lse = mx + std::log(denom);
                for (int j = 0; j < k; ++j) orow[j] = row[j] - lse;
            }
            break;
        }
    }

    check_finite(out.values(), op_name(kind));

    bool needs_grad = false;
    for (const Tensor& t : operands) needs_grad = needs_grad || t.requires_grad();
    if (needs_grad) {
        out.set_requires_grad(true);
        TapeEntry entry;
        entry.kind = kind;
        entry.attr = attr;
        for (const Tensor& t : operands) entry.inputs.push_back(t.impl());
        entry.output = out.impl();
        t_tape.entries().push_back(std::move(entry));
    }
    return out;
}

namespace {

Tensor apply2(OpKind kind, const Tensor& a, const Tensor& b) {
    const Tensor ops[2] = {a, b};
    return apply_primitive(kind, ops);
}

Tensor apply1(OpKind kind, const Tensor& x, double attr = 0.0) {
    const Tensor ops[1] = {x};
    return apply_primitive(kind, ops, attr);
}

// Backward rule for one tape entry. Accumulates into inputs that require grad.
void backprop_entry(const TapeEntry& e) {
    auto& out = *e.output;
    if (out.grad.empty()) return;  // no contribution flowed here

    auto in_grad = [&](std::size_t idx) -> std::vector<double>* {
        auto& impl = *e.inputs[idx];
        if (!impl.requires_grad) return nullptr;
        impl.ensure_grad();
        return &impl.grad;
    };

    switch (e.kind) {
        case OpKind::kAdd: {
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i];
            if (auto* g = in_grad(1))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i];
            break;
        }
        case OpKind::kSub: {
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i];
            if (auto* g = in_grad(1))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= out.grad[i];
            break;
        }
        case OpKind::kMul: {
            const auto& av = e.inputs[0]->values;
            const auto& bv = e.inputs[1]->values;
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i] * bv[i];
            if (auto* g = in_grad(1))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i] * av[i];
            break;
        }
        case OpKind::kMatMul: {
            const auto& a = *e.inputs[0];
            const auto& b = *e.inputs[1];
            const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
            if (auto* g = in_grad(0)) matmul_grad_a(out.grad.data(), b.values.data(), g->data(), m, k, n);
            if (auto* g = in_grad(1)) matmul_grad_b(a.values.data(), out.grad.data(), g->data(), m, k, n);
            break;
        }
        case OpKind::kRelu: {
            const auto& xv = e.inputs[0]->values;
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i)
                    if (xv[i] > 0.0) (*g)[i] += out.grad[i];  // subgradient at 0 is 0
            break;
        }
        case OpKind::kExp: {
            const auto& ov = out.values;
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i] * ov[i];
            break;
        }
        case OpKind::kLog: {
            const auto& xv = e.inputs[0]->values;
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i] / xv[i];
            break;
        }
        case OpKind::kSum: {
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[0];
            break;
        }
        case OpKind::kMean: {
            if (auto* g = in_grad(0)) {
                const double s = out.grad[0] / static_cast<double>(g->size());
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += s;
            }
            break;
        }
        case OpKind::kScale: {
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += e.attr * out.grad[i];
            break;
        }
        case OpKind::kAddBias: {
            const auto& x = *e.inputs[0];
            const int n = x.shape[0], k = x.shape[1];
            if (auto* g = in_grad(0))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += out.grad[i];
            if (auto* g = in_grad(1)) {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < k; ++j) (*g)[j] += out.grad[static_cast<std::size_t>(i) * k + j];
            }
            break;
        }
        case OpKind::kLogSoftmax: {
            // dz_j = g_j - softmax(z)_j * sum_k g_k, per row
            const auto& ov = out.values;
            const auto& x = *e.inputs[0];
            const int n = x.shape[0], k = x.shape[1];
            if (auto* g = in_grad(0)) {
                for (int i = 0; i < n; ++i) {
                    const double* grow = out.grad.data() + static_cast<std::size_t>(i) * k;
                    const double* orow = ov.data() + static_cast<std::size_t>(i) * k;
                    double* drow = g->data() + static_cast<std::size_t>(i) * k;
                    double gsum = 0.0;
                    for (int j = 0; j < k; ++j) gsum += grow[j];
                    for (int j = 0; j < k; ++j) drow[j] += grow[j] - std::exp(orow[j]) * gsum;
                }
            }
            break;
        }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return apply2(OpKind::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return apply2(OpKind::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return apply2(OpKind::kMul, a, b); }
Tensor matmul(const Tensor& a, const Tensor& b) { return apply2(OpKind::kMatMul, a, b); }
Tensor relu(const Tensor& x) { return apply1(OpKind::kRelu, x); }
Tensor exp(const Tensor& x) { return apply1(OpKind::kExp, x); }
Tensor log(const Tensor& x) { return apply1(OpKind::kLog, x); }
Tensor sum(const Tensor& x) { return apply1(OpKind::kSum, x); }
Tensor mean(const Tensor& x) { return apply1(OpKind::kMean, x); }
Tensor scale(const Tensor& x, double c) { return apply1(OpKind::kScale, x, c); }
Tensor add_bias(const Tensor& x, const Tensor& bias) { return apply2(OpKind::kAddBias, x, bias); }
Tensor log_softmax(const Tensor& logits) { return apply1(OpKind::kLogSoftmax, logits); }

void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw ShapeError("backward: loss must be scalar");
    if (!loss.requires_grad()) throw std::logic_error("backward: tensor is detached from the tape");
    if (t_tape.empty()) throw std::logic_error("backward: tape is empty");

    // Gradients of tape outputs (intermediates) are scratch space for this
    // pass; only leaf gradients persist, so repeated calls accumulate there.
    auto& entries = t_tape.entries();
    for (auto& e : entries) {
        if (!e.output->grad.empty())
            std::fill(e.output->grad.begin(), e.output->grad.end(), 0.0);
    }

    loss.impl()->ensure_grad();
    loss.impl()->grad[0] = 1.0;

    for (auto it = entries.rbegin(); it != entries.rend(); ++it) backprop_entry(*it);
}

}  // namespace softdistill
