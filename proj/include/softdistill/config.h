#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softdistill/curation.h"
#include "softdistill/dataset.h"
#include "softdistill/pipeline.h"

namespace softdistill {

// Fully-resolved experiment description. Every key has a default, so a
// minimal file parses; unknown sections or keys are rejected.
struct ExperimentConfig {
    SyntheticConfig dataset;

    std::vector<int> teacher_hidden{256, 256};
    TrainConfig teacher;

    std::vector<int> student_hidden{32};

    CurationConfig curation;

    TrainConfig distill;
    double quality_r0 = 0.8;       // teacher gate: mean val CE must not exceed this
    bool skip_quality_gate = false;

    TrainConfig finetune;

    std::string eval_checkpoint = "student_finetuned.ckpt";
    std::string eval_dataset = "val.bin";

    // Sweep axes; an empty list means "hold at the base value".
    std::vector<double> sweep_weight_decay;
    std::vector<std::string> sweep_teacher_checkpoint;
    std::vector<int> sweep_unlabeled_volume;
    std::vector<int> sweep_epochs;
    std::vector<std::uint64_t> seeds{0};

    std::string plot_input = "metrics.csv";
    std::string plot_series = "stage";
    std::string plot_x = "epoch";
    std::string plot_y = "train_loss";
    std::string plot_output = "plot.svg";

    std::string out_dir = "out";
};

ExperimentConfig default_config();

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// "section.key=value", e.g. "distill.weight_decay=3e-4".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Canonical text form; parses back to an identical config.
std::string render_config(const ExperimentConfig& cfg);

std::uint64_t config_hash(const ExperimentConfig& cfg);

// Hash over the sections that shape training artifacts (dataset, teacher,
// student, curation, distill, finetune) — stable under output/plot/evaluate
// edits so checkpoints stay resumable when only those change.
std::uint64_t training_hash(const ExperimentConfig& cfg);

MlpSpec teacher_spec(const ExperimentConfig& cfg);
MlpSpec student_spec(const ExperimentConfig& cfg);

}  // namespace softdistill
