#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softdistill/tensor.h"

namespace softdistill {

enum class LossKind { kHardCE, kSoftCE, kJsDiv };

LossKind parse_loss_kind(std::string_view name);
std::string_view loss_kind_name(LossKind kind);

// -mean_i log_softmax(logits)[i, labels[i]].
Tensor cross_entropy_hard(const Tensor& logits, const std::vector<int>& labels);

// -mean_i sum_k targets[i,k] * log_softmax(logits)[i,k]. Target rows must be
// nonnegative and sum to 1 within 1e-6.
Tensor soft_cross_entropy(const Tensor& logits, const Tensor& targets);

// mean_i JS(softmax(logits)_i, targets_i) in nats. Gradient flows only into
// the logits; the target-entropy term enters as a constant.
Tensor js_divergence(const Tensor& logits, const Tensor& targets);

// Plain-arithmetic helpers (no tape), shared by scoring and tests.

// In-place row softmax over an [n x k] row-major buffer.
void softmax_rows(std::span<double> vals, int n, int k);

// Lowest index on ties.
int argmax_row(std::span<const double> row);

// -sum p log p with 0 log 0 = 0, in nats.
double entropy_nats(std::span<const double> p);

double js_from_probs(std::span<const double> p, std::span<const double> q);

}  // namespace softdistill
