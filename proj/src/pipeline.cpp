#include "softdistill/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "softdistill/errors.h"
#include "softdistill/rng.h"
#include "softdistill/schedule.h"
#include "softdistill/serialize.h"
#include "softdistill/text.h"

namespace softdistill {

namespace {

constexpr std::string_view kCheckpointMagic = "SDLABCKP";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr int kEvalBatch = 256;

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (cfg.epochs > 0 && (cfg.warmup_epochs < 0 || cfg.warmup_epochs >= cfg.epochs))
        throw std::invalid_argument("train: warmup_epochs must lie in [0, epochs)");
    if (!(cfg.base_lr > 0.0)) throw std::invalid_argument("train: base_lr must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw std::invalid_argument("train: momentum must lie in [0, 1)");
    if (cfg.weight_decay < 0.0)
        throw std::invalid_argument("train: weight_decay must be nonnegative");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
}

// One stage's training matrix: either hard labels or cached soft target rows.
struct StageData {
    const double* features = nullptr;
    int n = 0;
    int dim = 0;
    int num_classes = 0;
    const std::vector<int>* hard_labels = nullptr;
    const std::vector<double>* soft_targets = nullptr;  // n x num_classes
};

Tensor gather_features(const StageData& data, const std::vector<int>& idx) {
    std::vector<double> block(idx.size() * static_cast<std::size_t>(data.dim));
    for (std::size_t b = 0; b < idx.size(); ++b)
        std::copy_n(data.features + static_cast<std::size_t>(idx[b]) * data.dim, data.dim,
                    block.data() + b * data.dim);
    return Tensor::from_data({static_cast<int>(idx.size()), data.dim}, block,
                             /*requires_grad=*/false);
}

Tensor batch_loss(LossKind kind, const Tensor& logits, const StageData& data,
                  const std::vector<int>& idx) {
    if (kind == LossKind::kHardCE) {
        std::vector<int> labels(idx.size());
        for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = (*data.hard_labels)[idx[b]];
        return cross_entropy_hard(logits, labels);
    }
    std::vector<double> rows(idx.size() * static_cast<std::size_t>(data.num_classes));
    for (std::size_t b = 0; b < idx.size(); ++b)
        std::copy_n(data.soft_targets->data() +
                        static_cast<std::size_t>(idx[b]) * data.num_classes,
                    data.num_classes, rows.data() + b * data.num_classes);
    Tensor targets = Tensor::from_data({static_cast<int>(idx.size()), data.num_classes}, rows,
                                       /*requires_grad=*/false);
    return kind == LossKind::kSoftCE ? soft_cross_entropy(logits, targets)
                                     : js_divergence(logits, targets);
}

void check_resume(const Checkpoint& resume, const char* stage, const MlpSpec& spec,
                  const TrainConfig& cfg) {
    if (resume.stage != stage)
        throw ConfigError("resume: checkpoint stage \"" + resume.stage +
                          "\" does not match \"" + stage + "\"");
    if (!(resume.spec == spec)) throw ConfigError("resume: checkpoint model shape differs");
    if (resume.seed != cfg.seed) throw ConfigError("resume: checkpoint seed differs");
    if (resume.epoch < 0 || resume.epoch > cfg.epochs)
        throw ConfigError("resume: checkpoint epoch outside configured range");
}

TrainResult run_stage(const char* stage, ModelParams params, OptimState optim, int start_epoch,
                      const StageData& data, const LabeledDataset& val, const TrainConfig& cfg) {
    TrainResult result;
    const ScheduleConfig sched{cfg.base_lr, cfg.warmup_epochs, cfg.epochs, 1};

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(sched, epoch);
        double loss_sum = 0.0;
        int batches = 0;
        try {
            for (const auto& idx : batch_indices(data.n, cfg.batch_size, cfg.seed, epoch)) {
                tape_reset();
                zero_grad(params);
                Tensor logits = forward(params, gather_features(data, idx));
                Tensor loss = batch_loss(cfg.loss, logits, data, idx);
                backward(loss);
                sgd_momentum_step(params, optim, lr, cfg.weight_decay);
                loss_sum += loss.value();
                ++batches;
            }
        } catch (const NonFiniteError& e) {
            tape_reset();
            throw DivergenceError(std::string(stage) + " diverged at epoch " +
                                  std::to_string(epoch + 1) + ": " + e.what());
        }
        tape_reset();

        if ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs) {
            const EvalResult ev = evaluate(params, val);
            MetricsRecord rec;
            rec.stage = stage;
            rec.epoch = epoch + 1;
            rec.train_loss = loss_sum / batches;
            rec.val_acc = ev.accuracy;
            rec.val_loss = ev.mean_loss;
            rec.lr = lr;
            rec.bound_proxy = generalization_bound_proxy(params, data.n);
            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.metrics.push_back(std::move(rec));
        }
    }

    result.params = std::move(params);
    result.optim = std::move(optim);
    return result;
}

ModelParams trainable_clone(const ModelParams& source) {
    ModelParams params = clone_params(source);
    set_requires_grad(params, true);
    return params;
}

}  // namespace

TrainResult train_teacher(const LabeledDataset& train, const LabeledDataset& val,
                          const MlpSpec& spec, const TrainConfig& cfg,
                          const Checkpoint* resume) {
    validate_train_config(cfg);
    if (cfg.loss != LossKind::kHardCE)
        throw ConfigError("train-teacher requires the hard_ce loss");
    if (train.dim != spec.input_dim || train.num_classes != spec.output_dim)
        throw ShapeError("train-teacher: dataset does not match model shape");
    if (val.dim != train.dim) throw ShapeError("train-teacher: validation dimension differs");

    ModelParams params;
    OptimState optim;
    int start_epoch = 0;
    if (resume != nullptr) {
        check_resume(*resume, "teacher", spec, cfg);
        params = trainable_clone(resume->params);
        optim = resume->optim;
        start_epoch = resume->epoch;
    } else {
        Rng init_rng = Rng::stream(cfg.seed, "init");
        params = init_mlp(spec, init_rng);
        optim = make_optim_state(params, cfg.momentum);
    }

    StageData data;
    data.features = train.features.data();
    data.n = train.size();
    data.dim = train.dim;
    data.num_classes = train.num_classes;
    data.hard_labels = &train.labels;
    return run_stage("teacher", std::move(params), std::move(optim), start_epoch, data, val, cfg);
}

TeacherQuality assert_teacher_quality(const ModelParams& teacher, const LabeledDataset& val,
                                      double r0) {
    if (!(r0 > 0.0)) throw std::invalid_argument("teacher quality: threshold must be positive");
    const EvalResult ev = evaluate(teacher, val);
    return TeacherQuality{ev.mean_loss <= r0, ev.mean_loss, r0};
}

SoftLabelSet precompute_soft_labels(const ModelParams& teacher, const LabeledDataset& labeled,
                                    const UnlabeledGallery& curated) {
    if (curated.size() > 0 && curated.dim != labeled.dim)
        throw ShapeError("soft labels: labeled and curated dimensions differ");

    UnlabeledGallery joined;
    joined.name = "soft-label-cache";
    joined.dim = labeled.dim;
    joined.features = labeled.features;
    joined.features.insert(joined.features.end(), curated.features.begin(),
                           curated.features.end());
    const int total = labeled.size() + curated.size();
    joined.ids.resize(total);
    for (int i = 0; i < total; ++i) joined.ids[i] = i;
    return score_gallery(teacher, joined);
}

TrainResult distill(const ModelParams& teacher, const MlpSpec& student_spec,
                    const LabeledDataset& labeled, const UnlabeledGallery& curated,
                    const LabeledDataset& val, const TrainConfig& cfg, const ModelParams* init,
                    const Checkpoint* resume) {
    validate_train_config(cfg);
    if (cfg.loss == LossKind::kHardCE)
        throw ConfigError("distill requires a soft loss (soft_ce or js_div)");
    if (labeled.dim != student_spec.input_dim)
        throw ShapeError("distill: dataset does not match student input");
    if (teacher.weights.empty() || teacher.weights.front().rows() != labeled.dim ||
        teacher.weights.back().cols() != student_spec.output_dim)
        throw ShapeError("distill: teacher shape incompatible with student");

    // Cached teacher rows are the only training signal: T's labels are never
    // consulted anywhere on this path.
    const SoftLabelSet soft = precompute_soft_labels(teacher, labeled, curated);

    std::vector<double> features = labeled.features;
    features.insert(features.end(), curated.features.begin(), curated.features.end());

    ModelParams params;
    OptimState optim;
    int start_epoch = 0;
    if (resume != nullptr) {
        check_resume(*resume, "distill", student_spec, cfg);
        params = trainable_clone(resume->params);
        optim = resume->optim;
        start_epoch = resume->epoch;
    } else if (init != nullptr) {
        params = trainable_clone(*init);
        optim = make_optim_state(params, cfg.momentum);
    } else {
        Rng init_rng = Rng::stream(cfg.seed, "init");
        params = init_mlp(student_spec, init_rng);
        optim = make_optim_state(params, cfg.momentum);
    }

    StageData data;
    data.features = features.data();
    data.n = labeled.size() + curated.size();
    data.dim = labeled.dim;
    data.num_classes = student_spec.output_dim;
    data.soft_targets = &soft.probs;
    return run_stage("distill", std::move(params), std::move(optim), start_epoch, data, val, cfg);
}

TrainResult finetune(const ModelParams& student, const LabeledDataset& train,
                     const LabeledDataset& val, const TrainConfig& cfg,
                     const Checkpoint* resume) {
    validate_train_config(cfg);
    if (cfg.loss != LossKind::kHardCE) throw ConfigError("finetune requires the hard_ce loss");
    if (student.weights.empty() || student.weights.front().rows() != train.dim ||
        student.weights.back().cols() != train.num_classes)
        throw ShapeError("finetune: dataset does not match student shape");

    ModelParams params;
    OptimState optim;
    int start_epoch = 0;
    if (resume != nullptr) {
        check_resume(*resume, "finetune", spec_of(student), cfg);
        params = trainable_clone(resume->params);
        optim = resume->optim;
        start_epoch = resume->epoch;
    } else {
        params = trainable_clone(student);
        optim = make_optim_state(params, cfg.momentum);
    }

    StageData data;
    data.features = train.features.data();
    data.n = train.size();
    data.dim = train.dim;
    data.num_classes = train.num_classes;
    data.hard_labels = &train.labels;
    return run_stage("finetune", std::move(params), std::move(optim), start_epoch, data, val,
                     cfg);
}

EvalResult evaluate(const ModelParams& params, const LabeledDataset& data) {
    if (data.size() == 0) throw ShapeError("evaluate: empty dataset");
    if (params.weights.empty() || params.weights.front().rows() != data.dim ||
        params.weights.back().cols() != data.num_classes)
        throw ShapeError("evaluate: dataset does not match model shape");

    const ModelParams frozen = clone_params(params);
    const int n = data.size();
    const int k = data.num_classes;
    int correct = 0;
    double loss_sum = 0.0;

    for (int start = 0; start < n; start += kEvalBatch) {
        const int count = std::min(kEvalBatch, n - start);
        std::vector<double> block(
            data.features.begin() + static_cast<std::size_t>(start) * data.dim,
            data.features.begin() + static_cast<std::size_t>(start + count) * data.dim);
        Tensor x = Tensor::from_data({count, data.dim}, block, /*requires_grad=*/false);
        Tensor logits = forward(frozen, x);
        auto vals = logits.values();
        for (int b = 0; b < count; ++b) {
            const double* row = vals.data() + static_cast<std::size_t>(b) * k;
            int best = 0;
            double mx = row[0];
            for (int j = 1; j < k; ++j) {
                if (row[j] > mx) {
                    mx = row[j];
                    best = j;
                }
            }
            double denom = 0.0;
            for (int j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
            const int label = data.labels[start + b];
            loss_sum += mx + std::log(denom) - row[label];
            if (best == label) ++correct;
        }
    }
    return EvalResult{static_cast<double>(correct) / n, loss_sum / n};
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    BinaryWriter w(path);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.str(cp.stage);
    w.u32(static_cast<std::uint32_t>(cp.epoch));
    w.u64(cp.config_hash);
    w.u64(cp.seed);

    w.u32(static_cast<std::uint32_t>(cp.spec.input_dim));
    w.u32(static_cast<std::uint32_t>(cp.spec.hidden.size()));
    for (int h : cp.spec.hidden) w.u32(static_cast<std::uint32_t>(h));
    w.u32(static_cast<std::uint32_t>(cp.spec.output_dim));

    w.u32(static_cast<std::uint32_t>(cp.params.weights.size()));
    for (const auto& t : cp.params.weights) w.f64_array(t.values());
    for (const auto& t : cp.params.biases) w.f64_array(t.values());

    w.f64(cp.optim.momentum);
    w.u32(static_cast<std::uint32_t>(cp.optim.velocity.size()));
    for (const auto& v : cp.optim.velocity) w.f64_array(v);
    w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kCheckpointMagic);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw VersionError(path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint cp;
    cp.stage = r.str();
    cp.epoch = static_cast<int>(r.u32());
    cp.config_hash = r.u64();
    cp.seed = r.u64();

    cp.spec.input_dim = static_cast<int>(r.u32());
    const std::uint32_t n_hidden = r.u32();
    for (std::uint32_t i = 0; i < n_hidden; ++i) cp.spec.hidden.push_back(static_cast<int>(r.u32()));
    cp.spec.output_dim = static_cast<int>(r.u32());

    const std::uint32_t n_layers = r.u32();
    const auto dims = layer_dims(cp.spec);
    if (n_layers != dims.size()) throw FormatError(path + ": layer count does not match shape");
    for (auto [fan_in, fan_out] : dims) {
        auto vals = r.f64_array(static_cast<std::size_t>(fan_in) * fan_out);
        cp.params.weights.push_back(
            Tensor::from_data({fan_in, fan_out}, vals, /*requires_grad=*/true));
    }
    for (auto [fan_in, fan_out] : dims) {
        auto vals = r.f64_array(static_cast<std::size_t>(fan_out));
        cp.params.biases.push_back(Tensor::from_data({fan_out}, vals, /*requires_grad=*/true));
    }

    cp.optim.momentum = r.f64();
    const std::uint32_t n_velocity = r.u32();
    if (n_velocity != 2 * n_layers)
        throw FormatError(path + ": optimizer state does not match layer count");
    for (auto [fan_in, fan_out] : dims)
        cp.optim.velocity.push_back(r.f64_array(static_cast<std::size_t>(fan_in) * fan_out));
    for (auto [fan_in, fan_out] : dims)
        cp.optim.velocity.push_back(r.f64_array(static_cast<std::size_t>(fan_out)));
    r.expect_eof();
    return cp;
}

void append_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    const bool need_header =
        !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (need_header) out << kMetricsHeader << "\n";
    for (const auto& rec : records) {
        out << rec.stage << ',' << rec.epoch << ',' << format_double(rec.train_loss) << ','
            << format_double(rec.val_acc) << ',' << format_double(rec.val_loss) << ','
            << format_double(rec.lr) << ',' << format_double(rec.bound_proxy) << ",0\n";
    }
    out.close();
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace softdistill
