#include "softdistill/schedule.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace softdistill {

double lr_at(const ScheduleConfig& config, int step) {
    if (config.base_lr <= 0.0) {
        throw std::invalid_argument("lr_at: base_lr must be positive");
    }
    if (config.steps_per_epoch < 1) {
        throw std::invalid_argument("lr_at: steps_per_epoch must be >= 1");
    }
    if (config.total_epochs < 1) {
        throw std::invalid_argument("lr_at: total_epochs must be >= 1");
    }
    const long long warm =
        static_cast<long long>(config.warmup_epochs) * config.steps_per_epoch;
    const long long total =
        static_cast<long long>(config.total_epochs) * config.steps_per_epoch;
    if (config.warmup_epochs < 0 || warm >= total) {
        throw std::invalid_argument(
            "lr_at: warmup_epochs must lie in [0, total_epochs)");
    }
    if (step < 0 || step > total) {
        throw std::invalid_argument("lr_at: step " + std::to_string(step) +
                                    " outside [0, " + std::to_string(total) +
                                    "]");
    }
    if (step < warm) {
        return config.base_lr * static_cast<double>(step + 1) /
               static_cast<double>(warm);
    }
    const double progress = static_cast<double>(step - warm) /
                            static_cast<double>(total - warm);
    return config.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace softdistill
