#include "softdistill/grad_check.h"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace softdistill {

namespace {

double eval_detached(const std::function<Tensor(const Tensor&)>& f, const Shape& shape,
                     const std::vector<double>& vals) {
    Tensor x = Tensor::from_data(shape, vals, /*requires_grad=*/false);
    Tensor y = f(x);
    if (y.numel() != 1) throw ShapeError("grad_check: function output must be scalar");
    return y.value();
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                           double h) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

    std::vector<double> base(point.values().begin(), point.values().end());

    tape_reset();
    Tensor x = Tensor::from_data(point.shape(), base, /*requires_grad=*/true);
    Tensor y = f(x);
    if (y.numel() != 1) throw ShapeError("grad_check: function output must be scalar");
    backward(y);
    std::vector<double> analytic(x.grad().begin(), x.grad().end());
    tape_reset();

    GradCheckResult result;
    std::vector<double> probe = base;
    for (std::size_t i = 0; i < base.size(); ++i) {
        probe[i] = base[i] + h;
        const double up = eval_detached(f, point.shape(), probe);
        probe[i] = base[i] - h;
        const double down = eval_detached(f, point.shape(), probe);
        probe[i] = base[i];

        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
        const double rel = std::fabs(analytic[i] - numeric) / denom;
        if (rel >= result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_index = i;
            result.worst_analytic = analytic[i];
            result.worst_numeric = numeric;
        }
    }
    return result;
}

}  // namespace softdistill
