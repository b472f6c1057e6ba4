#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softdistill/curation.h"
#include "softdistill/dataset.h"
#include "softdistill/losses.h"
#include "softdistill/mlp.h"
#include "softdistill/optim.h"

namespace softdistill {

struct TrainConfig {
    LossKind loss = LossKind::kHardCE;
    double base_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int epochs = 100;
    int warmup_epochs = 5;
    int batch_size = 64;
    std::uint64_t seed = 0;
    int eval_every = 1;  // epochs between metric records; final epoch always records
};

struct MetricsRecord {
    std::string stage;
    int epoch = 0;           // 1-based count of completed epochs
    double train_loss = 0.0;  // mean batch loss this epoch (decay term excluded)
    double val_acc = 0.0;
    double val_loss = 0.0;  // mean hard CE on the validation set
    double lr = 0.0;
    double bound_proxy = 0.0;
    double seconds = 0.0;  // wall clock; serialized as 0 to keep files reproducible
};

struct Checkpoint {
    MlpSpec spec;
    ModelParams params;
    OptimState optim;
    std::string stage;
    int epoch = 0;  // completed epochs within the stage
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;  // run seed; epoch streams derive from it statelessly
};

struct TrainResult {
    ModelParams params;
    OptimState optim;
    std::vector<MetricsRecord> metrics;
};

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

struct TeacherQuality {
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
};

// Supervised hard-label training (requires cfg.loss == hard_ce).
TrainResult train_teacher(const LabeledDataset& train, const LabeledDataset& val,
                          const MlpSpec& spec, const TrainConfig& cfg,
                          const Checkpoint* resume = nullptr);

// Mean hard-CE risk on the validation set, gated against threshold r0.
TeacherQuality assert_teacher_quality(const ModelParams& teacher, const LabeledDataset& val,
                                      double r0);

// Teacher probabilities cached for every row of T followed by every row of U;
// ids are positions in that concatenation. T's labels are never read.
SoftLabelSet precompute_soft_labels(const ModelParams& teacher, const LabeledDataset& labeled,
                                    const UnlabeledGallery& curated);

// Soft-target training over T ∪ U against cached teacher rows (soft_ce or
// js_div only). `init` overrides the seeded student initialization.
TrainResult distill(const ModelParams& teacher, const MlpSpec& student_spec,
                    const LabeledDataset& labeled, const UnlabeledGallery& curated,
                    const LabeledDataset& val, const TrainConfig& cfg,
                    const ModelParams* init = nullptr, const Checkpoint* resume = nullptr);

// Hard-label adaptation of an already-trained student; no warmup.
TrainResult finetune(const ModelParams& student, const LabeledDataset& train,
                     const LabeledDataset& val, const TrainConfig& cfg,
                     const Checkpoint* resume = nullptr);

// Top-1 accuracy (argmax, ties to the lowest index) and mean hard CE.
EvalResult evaluate(const ModelParams& params, const LabeledDataset& data);

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// Appends records to a CSV, writing the fixed header when the file is new.
// The seconds column is always written as 0 so identical runs produce
// identical bytes.
void append_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);

constexpr const char* kMetricsHeader = "stage,epoch,train_loss,val_acc,val_loss,lr,bound_proxy,seconds";

}  // namespace softdistill
