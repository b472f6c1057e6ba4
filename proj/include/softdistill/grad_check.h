#pragma once

#include <cstddef>
#include <functional>

#include "softdistill/tensor.h"

namespace softdistill {

struct GradCheckResult {
    double max_rel_err = 0.0;   // max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|)
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Compares the tape gradient of a scalar-valued function against central
// differences at `point`. `f` must build its output from primitives applied to
// the tensor it is given; evaluations for the numeric side run on detached
// inputs so they leave no tape entries behind.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                           double h = 1e-5);

}  // namespace softdistill
