#include "softdistill/sweep.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "softdistill/errors.h"
#include "softdistill/text.h"

namespace softdistill {

namespace fs = std::filesystem;

namespace {

struct GridPoint {
    double weight_decay;
    std::string teacher_checkpoint;
    int unlabeled_volume;
    int epochs;
    std::uint64_t seed;
};

struct SweepRow {
    std::string key;
    GridPoint point;
    double final_val_acc = 0.0;
    double final_train_loss = 0.0;
};

std::string hex_key(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

ExperimentConfig derive_config(const ExperimentConfig& base, const GridPoint& p) {
    ExperimentConfig derived = base;
    derived.distill.weight_decay = p.weight_decay;
    derived.distill.epochs = p.epochs;
    derived.distill.seed = p.seed;
    derived.finetune.seed = p.seed;
    if (p.unlabeled_volume % base.dataset.num_classes != 0)
        throw ConfigError("sweep: unlabeled_volume " + std::to_string(p.unlabeled_volume) +
                          " is not a multiple of num_classes");
    derived.curation.top_k_per_class = p.unlabeled_volume / base.dataset.num_classes;
    return derived;
}

std::string resolve(const std::string& out_dir, const std::string& path) {
    return fs::path(path).is_absolute() ? path : (fs::path(out_dir) / path).string();
}

std::string row_text(const SweepRow& r) {
    std::string line = r.key;
    line += ',' + format_double(r.point.weight_decay);
    line += ',' + r.point.teacher_checkpoint;
    line += ',' + std::to_string(r.point.unlabeled_volume);
    line += ',' + std::to_string(r.point.epochs);
    line += ',' + std::to_string(r.point.seed);
    line += ',' + format_double(r.final_val_acc);
    line += ',' + format_double(r.final_train_loss);
    line += ",0\n";
    return line;
}

// Shared, read-only inputs for all grid points.
struct SweepInputs {
    LabeledDataset train;
    LabeledDataset val;
    UnlabeledGallery gallery;
};

SweepRow run_point(const ExperimentConfig& base, const GridPoint& p, const SweepInputs& in,
                   const std::string& out_dir, const std::string& key) {
    const ExperimentConfig derived = derive_config(base, p);

    const std::string teacher_path = resolve(out_dir, p.teacher_checkpoint);
    if (!fs::exists(teacher_path))
        throw DependencyError("sweep: teacher checkpoint missing: " + teacher_path);
    const Checkpoint teacher = load_checkpoint(teacher_path);

    if (!derived.skip_quality_gate) {
        const TeacherQuality q =
            assert_teacher_quality(teacher.params, in.val, derived.quality_r0);
        if (!q.pass)
            throw TeacherQualityError("sweep: teacher risk " + format_double(q.measured) +
                                      " exceeds threshold " + format_double(q.threshold));
    }

    UnlabeledGallery curated;
    curated.dim = in.gallery.dim;
    if (derived.curation.top_k_per_class > 0)
        curated = curate(in.gallery, in.val, teacher.params, derived.curation).first;

    const fs::path run_dir = fs::path(out_dir) / "sweep" / ("run_" + key);
    fs::create_directories(run_dir);

    const std::uint64_t hash = training_hash(derived);
    TrainResult distilled = distill(teacher.params, student_spec(derived), in.train, curated,
                                    in.val, derived.distill);
    save_checkpoint((run_dir / "student.ckpt").string(),
                    Checkpoint{student_spec(derived), distilled.params, distilled.optim,
                               "distill", derived.distill.epochs, hash, derived.distill.seed});
    append_metrics_csv((run_dir / "metrics.csv").string(), distilled.metrics);

    TrainResult tuned = finetune(distilled.params, in.train, in.val, derived.finetune);
    save_checkpoint((run_dir / "student_finetuned.ckpt").string(),
                    Checkpoint{student_spec(derived), tuned.params, tuned.optim, "finetune",
                               derived.finetune.epochs, hash, derived.finetune.seed});
    append_metrics_csv((run_dir / "metrics.csv").string(), tuned.metrics);

    SweepRow row;
    row.key = key;
    row.point = p;
    row.final_val_acc = evaluate(tuned.params, in.val).accuracy;
    row.final_train_loss =
        distilled.metrics.empty() ? 0.0 : distilled.metrics.back().train_loss;
    return row;
}

}  // namespace

void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
    if (cfg.sweep_weight_decay.empty() && cfg.sweep_teacher_checkpoint.empty() &&
        cfg.sweep_unlabeled_volume.empty() && cfg.sweep_epochs.empty())
        throw ConfigError("sweep: configure at least one axis under [sweep]");
    if (cfg.seeds.empty()) throw ConfigError("sweep: seeds list is empty");
    if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");

    const std::vector<double> wds =
        cfg.sweep_weight_decay.empty() ? std::vector<double>{cfg.distill.weight_decay}
                                       : cfg.sweep_weight_decay;
    const std::vector<std::string> ckpts =
        cfg.sweep_teacher_checkpoint.empty() ? std::vector<std::string>{"teacher.ckpt"}
                                             : cfg.sweep_teacher_checkpoint;
    const std::vector<int> volumes =
        cfg.sweep_unlabeled_volume.empty()
            ? std::vector<int>{cfg.dataset.num_classes * cfg.curation.top_k_per_class}
            : cfg.sweep_unlabeled_volume;
    const std::vector<int> epochs =
        cfg.sweep_epochs.empty() ? std::vector<int>{cfg.distill.epochs} : cfg.sweep_epochs;
    for (int e : epochs)
        if (e < 1) throw ConfigError("sweep: epochs values must be >= 1");

    std::vector<GridPoint> grid;
    for (double wd : wds)
        for (const auto& ckpt : ckpts)
            for (int vol : volumes)
                for (int ep : epochs)
                    for (std::uint64_t seed : cfg.seeds)
                        grid.push_back(GridPoint{wd, ckpt, vol, ep, seed});

    std::vector<std::string> keys(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        keys[i] = hex_key(training_hash(derive_config(cfg, grid[i])));
    {
        std::vector<std::string> sorted = keys;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("sweep: duplicate grid point (repeated axis value or seed)");
    }

    SweepInputs inputs;
    const std::string train_path = (fs::path(out_dir) / "train.bin").string();
    const std::string val_path = (fs::path(out_dir) / "val.bin").string();
    const std::string gallery_path = (fs::path(out_dir) / "gallery.bin").string();
    for (const auto& p : {train_path, val_path, gallery_path})
        if (!fs::exists(p)) throw DependencyError("sweep: missing dataset artifact: " + p +
                                                  " (run gen-data first)");
    inputs.train = load_dataset(train_path);
    inputs.val = load_dataset(val_path);
    inputs.gallery = load_gallery(gallery_path);

    // Keys already present in the CSV are complete; skip them.
    const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
    std::vector<bool> skip(grid.size(), false);
    if (fs::exists(csv_path)) {
        std::ifstream in(csv_path);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            const std::string done = line.substr(0, line.find(','));
            for (std::size_t i = 0; i < keys.size(); ++i)
                if (keys[i] == done) skip[i] = true;
        }
    } else {
        std::ofstream out(csv_path);
        if (!out) throw IoError("cannot open for writing: " + csv_path);
        out << kSweepHeader << "\n";
    }

    // Workers pull grid indices; rows commit strictly in grid order so the
    // CSV bytes do not depend on scheduling.
    std::vector<std::optional<SweepRow>> results(grid.size());
    std::vector<bool> done(grid.size(), false);
    std::size_t next_commit = 0;
    std::mutex commit_mu;
    std::atomic<std::size_t> next_index{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto commit_ready = [&] {  // caller holds commit_mu
        while (next_commit < grid.size() && done[next_commit]) {
            if (results[next_commit].has_value()) {
                std::ofstream out(csv_path, std::ios::app);
                if (!out) throw IoError("cannot open for writing: " + csv_path);
                out << row_text(*results[next_commit]);
                out.close();
                if (!out) throw IoError("write failed: " + csv_path);
            }
            ++next_commit;
        }
    };

    auto worker = [&] {
        while (true) {
            {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (failure) return;
            }
            const std::size_t i = next_index.fetch_add(1);
            if (i >= grid.size()) return;
            try {
                std::optional<SweepRow> row;
                if (!skip[i]) row = run_point(cfg, grid[i], inputs, out_dir, keys[i]);
                std::lock_guard<std::mutex> lock(commit_mu);
                results[i] = std::move(row);
                done[i] = true;
                commit_ready();
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::min<std::size_t>(jobs, grid.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace softdistill
