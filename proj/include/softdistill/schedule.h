#pragma once

namespace softdistill {

// Cosine decay with a linear warmup ramp. With W = warmup_epochs *
// steps_per_epoch and S = total_epochs * steps_per_epoch:
//   step < W:  base * (step + 1) / W      (ramp from base/W, not 0)
//   step >= W: base * 0.5 * (1 + cos(pi * (step - W) / (S - W)))
// Valid for step in [0, S]; lr(S) == 0. Training consumes steps 0..S-1; the
// endpoint is the decay target.
struct ScheduleConfig {
    double base_lr = 0.1;
    int warmup_epochs = 0;
    int total_epochs = 1;
    int steps_per_epoch = 1;
};

double lr_at(const ScheduleConfig& config, int step);

}  // namespace softdistill
