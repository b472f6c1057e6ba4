#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "softdistill/errors.h"

namespace softdistill {

// Dense double-precision tensors (rank 1 or 2, row-major) with reverse-mode
// automatic differentiation. The tape is define-by-run and thread-local: one
// training step builds it during the forward pass, backward() replays it in
// reverse, tape_reset() drops it. Values are validated finite after every
// primitive; NaN/Inf raises NonFiniteError instead of propagating.

using Shape = std::vector<int>;

enum class OpKind {
    kAdd,
    kSub,
    kMul,
    kMatMul,
    kRelu,
    kExp,
    kLog,
    kSum,
    kMean,
    kScale,
    kAddBias,
    kLogSoftmax,
};

const char* op_name(OpKind kind);

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    // Rank-2 accessors; rank-1 tensors report rows() == 1.
    int rows() const { return rank() == 2 ? impl_->shape[0] : 1; }
    int cols() const { return rank() == 2 ? impl_->shape[1] : impl_->shape[0]; }
    std::int64_t numel() const { return impl_->numel(); }

    std::span<const double> values() const { return impl_->values; }
    std::span<double> mutable_values() { return impl_->values; }
    double at(int i, int j) const { return impl_->values[static_cast<std::size_t>(i) * cols() + j]; }
    double value() const;  // numel()==1 only

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool v) { impl_->requires_grad = v; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad() {
        if (has_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }

    // Same storage check (aliasing, not value equality).
    bool is(const Tensor& other) const { return impl_ == other.impl_; }

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

    std::shared_ptr<detail::TensorImpl> impl_;

    friend Tensor apply_primitive(OpKind, std::span<const Tensor>, double);
};

// Records one primitive application: operand refs plus the backward rule.
struct TapeEntry {
    OpKind kind;
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    double attr = 0.0;
};

class Tape {
public:
    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::vector<TapeEntry>& entries() { return entries_; }

private:
    std::vector<TapeEntry> entries_;
};

// One tape per thread; concurrent experiments never share one.
Tape& active_tape();
void tape_reset();
std::size_t tape_size();

// Applies one primitive, validating shapes and result finiteness. The result
// is recorded on the active tape when any operand requires grad. `attr`
// carries the scalar for kScale and is ignored elsewhere.
Tensor apply_primitive(OpKind kind, std::span<const Tensor> operands, double attr = 0.0);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor add_bias(const Tensor& x, const Tensor& bias);

// Row-wise log(softmax), stabilized by max subtraction. Requires >= 2 columns.
Tensor log_softmax(const Tensor& logits);

// Reverse pass from a scalar loss. Populates grads of every requires_grad
// tensor reachable on the tape. Repeated calls without tape_reset accumulate.
void backward(const Tensor& loss);

}  // namespace softdistill
