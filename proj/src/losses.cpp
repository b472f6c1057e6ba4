#include "softdistill/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "softdistill/errors.h"

namespace softdistill {

namespace {

void validate_distribution_rows(const Tensor& targets, const Tensor& logits, const char* what) {
    if (targets.shape() != logits.shape())
        throw ShapeError(std::string(what) + ": target shape does not match logits");
    if (targets.requires_grad())
        throw std::invalid_argument(std::string(what) + ": targets must be detached");
    const int n = targets.rows();
    const int k = targets.cols();
    auto vals = targets.values();
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double v = vals[static_cast<std::size_t>(i) * k + j];
            if (v < 0.0)
                throw std::invalid_argument(std::string(what) + ": negative target probability");
            row_sum += v;
        }
        if (std::fabs(row_sum - 1.0) > 1e-6)
            throw std::invalid_argument(std::string(what) + ": target row does not sum to 1");
    }
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
    if (name == "hard_ce") return LossKind::kHardCE;
    if (name == "soft_ce") return LossKind::kSoftCE;
    if (name == "js_div") return LossKind::kJsDiv;
    throw ConfigError("unknown loss kind: " + std::string(name));
}

std::string_view loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::kHardCE: return "hard_ce";
        case LossKind::kSoftCE: return "soft_ce";
        case LossKind::kJsDiv: return "js_div";
    }
    throw std::logic_error("unreachable loss kind");
}

Tensor cross_entropy_hard(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw ShapeError("hard_ce: logits must be [n x k]");
    const int n = logits.rows();
    const int k = logits.cols();
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("hard_ce: label count does not match logits rows");

    std::vector<double> onehot(static_cast<std::size_t>(n) * k, 0.0);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k)
            throw std::invalid_argument("hard_ce: label out of range");
        onehot[static_cast<std::size_t>(i) * k + labels[i]] = 1.0;
    }
    Tensor pick = Tensor::from_data({n, k}, onehot, /*requires_grad=*/false);
    return scale(sum(mul(pick, log_softmax(logits))), -1.0 / n);
}

Tensor soft_cross_entropy(const Tensor& logits, const Tensor& targets) {
    if (logits.rank() != 2) throw ShapeError("soft_ce: logits must be [n x k]");
    validate_distribution_rows(targets, logits, "soft_ce");
    const int n = logits.rows();
    return scale(sum(mul(targets, log_softmax(logits))), -1.0 / n);
}

Tensor js_divergence(const Tensor& logits, const Tensor& targets) {
    if (logits.rank() != 2) throw ShapeError("js_div: logits must be [n x k]");
    validate_distribution_rows(targets, logits, "js_div");
    const int n = logits.rows();

    // sum_rows sum_k q log q, a constant: gradient must not flow into targets.
    double target_entropy_sum = 0.0;
    for (double q : targets.values())
        if (q > 0.0) target_entropy_sum += q * std::log(q);

    Tensor ls = log_softmax(logits);
    Tensor p = exp(ls);
    Tensor log_m = log(scale(add(p, targets), 0.5));
    // sum_ik p (log p - log m) = sum of KL(p_i || m_i)
    Tensor kl_p = sum(mul(p, sub(ls, log_m)));
    // sum of KL(q_i || m_i) = sum q log q - sum q log m
    Tensor kl_q = sub(Tensor::scalar(target_entropy_sum), sum(mul(targets, log_m)));
    return scale(add(kl_p, kl_q), 0.5 / n);
}

void softmax_rows(std::span<double> vals, int n, int k) {
    if (n <= 0 || k <= 0 || vals.size() != static_cast<std::size_t>(n) * k)
        throw ShapeError("softmax_rows: buffer does not match n x k");
    for (int i = 0; i < n; ++i) {
        double* row = vals.data() + static_cast<std::size_t>(i) * k;
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) {
            row[j] = std::exp(row[j] - mx);
            denom += row[j];
        }
        for (int j = 0; j < k; ++j) row[j] /= denom;
    }
}

int argmax_row(std::span<const double> row) {
    if (row.empty()) throw ShapeError("argmax_row: empty row");
    int best = 0;
    for (int j = 1; j < static_cast<int>(row.size()); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

double entropy_nats(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double js_from_probs(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty())
        throw ShapeError("js_from_probs: distributions must be same nonzero length");
    double js = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double m = 0.5 * (p[j] + q[j]);
        if (p[j] > 0.0) js += 0.5 * p[j] * std::log(p[j] / m);
        if (q[j] > 0.0) js += 0.5 * q[j] * std::log(q[j] / m);
    }
    return js;
}

}  // namespace softdistill
