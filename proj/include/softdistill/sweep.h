#pragma once

#include <string>

#include "softdistill/config.h"

namespace softdistill {

constexpr const char* kSweepHeader =
    "key,weight_decay,teacher_checkpoint,unlabeled_volume,epochs,seed,final_val_acc,"
    "final_train_loss,seconds";

// Runs distill -> finetune -> evaluate for the Cartesian product of the
// configured sweep axes x seeds, appending one CSV row per completed run to
// <out_dir>/sweep.csv. Rows commit in grid order regardless of `jobs`, so the
// file is byte-stable; completed keys are skipped on re-invocation.
void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);

}  // namespace softdistill
