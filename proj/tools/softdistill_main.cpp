#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "softdistill/config.h"
#include "softdistill/curation.h"
#include "softdistill/dataset.h"
#include "softdistill/errors.h"
#include "softdistill/pipeline.h"
#include "softdistill/plot.h"
#include "softdistill/sweep.h"
#include "softdistill/text.h"

namespace fs = std::filesystem;
using namespace softdistill;

namespace {

constexpr const char* kUsage =
    "usage: softdistill <gen-data|train-teacher|curate|distill|finetune|evaluate|sweep|plot>"
    " --config PATH [--set key=value]... [--jobs N] [--out DIR]\n";

struct CliArgs {
    std::string command;
    std::string config_path;
    std::string out_override;
    std::vector<std::string> overrides;
    int jobs = 1;
};

CliArgs parse_args(int argc, char** argv) {
    CliArgs args;
    if (argc < 2) throw ConfigError("missing command");
    args.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string flag = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) throw ConfigError(flag + " needs a value");
            return argv[++i];
        };
        if (flag == "--config") {
            args.config_path = value();
        } else if (flag == "--set") {
            args.overrides.push_back(value());
        } else if (flag == "--jobs") {
            const std::string v = value();
            try {
                args.jobs = std::stoi(v);
            } catch (const std::exception&) {
                throw ConfigError("--jobs: invalid number \"" + v + "\"");
            }
            if (args.jobs < 1) throw ConfigError("--jobs must be >= 1");
        } else if (flag == "--out") {
            args.out_override = value();
        } else {
            throw ConfigError("unknown flag \"" + flag + "\"");
        }
    }
    if (args.config_path.empty()) throw ConfigError("--config is required");
    return args;
}

std::string artifact(const std::string& out_dir, const std::string& name) {
    return (fs::path(out_dir) / name).string();
}

void require_artifact(const std::string& path, const std::string& hint) {
    if (!fs::exists(path))
        throw DependencyError("missing artifact " + path + " (" + hint + ")");
}

// Loads an existing stage checkpoint for skip/resume. Returns nullopt when the
// stage still has to start fresh; throws when the file belongs to a different
// configuration.
std::optional<Checkpoint> stage_checkpoint(const std::string& path, const std::string& stage,
                                           std::uint64_t expected_hash) {
    if (!fs::exists(path)) return std::nullopt;
    Checkpoint cp = load_checkpoint(path);
    if (cp.stage != stage)
        throw ConfigError(path + " holds a \"" + cp.stage + "\" checkpoint, expected \"" +
                          stage + "\"");
    if (cp.config_hash != expected_hash)
        throw ConfigError(path + " was written under a different config; use a fresh --out");
    return cp;
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    const SyntheticBundle bundle = generate_synthetic(cfg.dataset);
    save_dataset(artifact(out_dir, "train.bin"), bundle.train);
    save_dataset(artifact(out_dir, "val.bin"), bundle.val);
    save_gallery(artifact(out_dir, "gallery.bin"), bundle.gallery);

    std::ofstream dup(artifact(out_dir, "planted_duplicates.txt"));
    if (!dup) throw IoError("cannot open for writing: planted_duplicates.txt");
    for (std::int64_t id : bundle.planted_duplicate_ids) dup << id << "\n";
    dup.close();

    std::cout << "gen-data: train=" << bundle.train.size() << " val=" << bundle.val.size()
              << " gallery=" << bundle.gallery.size()
              << " planted_duplicates=" << bundle.planted_duplicate_ids.size()
              << " bayes_val_acc=" << format_double(bayes_accuracy(bundle.oracle, bundle.val))
              << "\n";
}

void cmd_train_teacher(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_artifact(artifact(out_dir, "train.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "val.bin"), "run gen-data first");
    const LabeledDataset train = load_dataset(artifact(out_dir, "train.bin"));
    const LabeledDataset val = load_dataset(artifact(out_dir, "val.bin"));

    const std::uint64_t hash = training_hash(cfg);
    const std::string ckpt_path = artifact(out_dir, "teacher.ckpt");
    const auto existing = stage_checkpoint(ckpt_path, "teacher", hash);
    if (existing && existing->epoch >= cfg.teacher.epochs) {
        std::cout << "train-teacher: already complete at epoch " << existing->epoch << "\n";
        return;
    }

    const TrainResult result = train_teacher(train, val, teacher_spec(cfg), cfg.teacher,
                                             existing ? &*existing : nullptr);
    save_checkpoint(ckpt_path, Checkpoint{teacher_spec(cfg), result.params, result.optim,
                                          "teacher", cfg.teacher.epochs, hash,
                                          cfg.teacher.seed});
    append_metrics_csv(artifact(out_dir, "metrics.csv"), result.metrics);

    const EvalResult ev = evaluate(result.params, val);
    std::cout << "train-teacher: epochs=" << cfg.teacher.epochs
              << " val_acc=" << format_double(ev.accuracy)
              << " val_loss=" << format_double(ev.mean_loss) << "\n";
}

void cmd_curate(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_artifact(artifact(out_dir, "gallery.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "val.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "teacher.ckpt"), "run train-teacher first");
    const UnlabeledGallery gallery = load_gallery(artifact(out_dir, "gallery.bin"));
    const LabeledDataset val = load_dataset(artifact(out_dir, "val.bin"));
    const Checkpoint teacher = load_checkpoint(artifact(out_dir, "teacher.ckpt"));

    auto [curated, report] = curate(gallery, val, teacher.params, cfg.curation);
    save_gallery(artifact(out_dir, "curated.bin"), curated);
    write_curation_report(artifact(out_dir, "curation_report.txt"), report);

    std::cout << "curate: in=" << report.gallery_in << " removed=" << report.removed_duplicates
              << " selected=" << report.selected << "\n";
}

void cmd_distill(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_artifact(artifact(out_dir, "train.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "val.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "teacher.ckpt"), "run train-teacher first");
    require_artifact(artifact(out_dir, "curated.bin"), "run curate first");
    const LabeledDataset train = load_dataset(artifact(out_dir, "train.bin"));
    const LabeledDataset val = load_dataset(artifact(out_dir, "val.bin"));
    const Checkpoint teacher = load_checkpoint(artifact(out_dir, "teacher.ckpt"));
    const UnlabeledGallery curated = load_gallery(artifact(out_dir, "curated.bin"));

    if (!cfg.skip_quality_gate) {
        const TeacherQuality q = assert_teacher_quality(teacher.params, val, cfg.quality_r0);
        if (!q.pass)
            throw TeacherQualityError(
                "teacher risk " + format_double(q.measured) + " exceeds threshold " +
                format_double(q.threshold) + "; set distill.skip_quality_gate=1 to override");
    }

    const std::uint64_t hash = training_hash(cfg);
    const std::string ckpt_path = artifact(out_dir, "student.ckpt");
    const auto existing = stage_checkpoint(ckpt_path, "distill", hash);
    if (existing && existing->epoch >= cfg.distill.epochs) {
        std::cout << "distill: already complete at epoch " << existing->epoch << "\n";
        return;
    }

    const TrainResult result = distill(teacher.params, student_spec(cfg), train, curated, val,
                                       cfg.distill, nullptr, existing ? &*existing : nullptr);
    save_checkpoint(ckpt_path, Checkpoint{student_spec(cfg), result.params, result.optim,
                                          "distill", cfg.distill.epochs, hash,
                                          cfg.distill.seed});
    append_metrics_csv(artifact(out_dir, "metrics.csv"), result.metrics);

    const EvalResult ev = evaluate(result.params, val);
    std::cout << "distill: epochs=" << cfg.distill.epochs
              << " loss=" << loss_kind_name(cfg.distill.loss) << " |U|=" << curated.size()
              << " val_acc=" << format_double(ev.accuracy) << "\n";
}

void cmd_finetune(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_artifact(artifact(out_dir, "train.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "val.bin"), "run gen-data first");
    require_artifact(artifact(out_dir, "student.ckpt"), "run distill first");
    const LabeledDataset train = load_dataset(artifact(out_dir, "train.bin"));
    const LabeledDataset val = load_dataset(artifact(out_dir, "val.bin"));
    const Checkpoint student = load_checkpoint(artifact(out_dir, "student.ckpt"));

    const std::uint64_t hash = training_hash(cfg);
    const std::string ckpt_path = artifact(out_dir, "student_finetuned.ckpt");
    const auto existing = stage_checkpoint(ckpt_path, "finetune", hash);
    if (existing && existing->epoch >= cfg.finetune.epochs) {
        std::cout << "finetune: already complete at epoch " << existing->epoch << "\n";
        return;
    }

    const TrainResult result =
        finetune(student.params, train, val, cfg.finetune, existing ? &*existing : nullptr);
    save_checkpoint(ckpt_path, Checkpoint{student.spec, result.params, result.optim, "finetune",
                                          cfg.finetune.epochs, hash, cfg.finetune.seed});
    append_metrics_csv(artifact(out_dir, "metrics.csv"), result.metrics);

    const EvalResult ev = evaluate(result.params, val);
    std::cout << "finetune: epochs=" << cfg.finetune.epochs
              << " val_acc=" << format_double(ev.accuracy)
              << " val_loss=" << format_double(ev.mean_loss) << "\n";
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string ckpt_path = fs::path(cfg.eval_checkpoint).is_absolute()
                                      ? cfg.eval_checkpoint
                                      : artifact(out_dir, cfg.eval_checkpoint);
    const std::string data_path = fs::path(cfg.eval_dataset).is_absolute()
                                      ? cfg.eval_dataset
                                      : artifact(out_dir, cfg.eval_dataset);
    require_artifact(ckpt_path, "train a model first or set evaluate.checkpoint");
    require_artifact(data_path, "run gen-data first or set evaluate.dataset");

    const Checkpoint cp = load_checkpoint(ckpt_path);
    const LabeledDataset data = load_dataset(data_path);
    const EvalResult ev = evaluate(cp.params, data);

    std::ofstream out(artifact(out_dir, "eval.txt"));
    if (!out) throw IoError("cannot open for writing: eval.txt");
    out << "checkpoint = " << cfg.eval_checkpoint << "\n"
        << "dataset = " << cfg.eval_dataset << "\n"
        << "accuracy = " << format_double(ev.accuracy) << "\n"
        << "loss = " << format_double(ev.mean_loss) << "\n";
    out.close();

    std::cout << "evaluate: checkpoint=" << cfg.eval_checkpoint
              << " accuracy=" << format_double(ev.accuracy)
              << " loss=" << format_double(ev.mean_loss) << "\n";
}

void cmd_plot(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string in_path = fs::path(cfg.plot_input).is_absolute()
                                    ? cfg.plot_input
                                    : artifact(out_dir, cfg.plot_input);
    require_artifact(in_path, "produce metrics first");
    const std::string out_path = fs::path(cfg.plot_output).is_absolute()
                                     ? cfg.plot_output
                                     : artifact(out_dir, cfg.plot_output);
    render_line_chart(in_path, cfg.plot_series, cfg.plot_x, cfg.plot_y, out_path);
    std::cout << "plot: wrote " << out_path << "\n";
}

int dispatch(const CliArgs& args) {
    ExperimentConfig cfg = parse_config(args.config_path);
    for (const auto& assignment : args.overrides) apply_override(cfg, assignment);

    std::string out_dir = cfg.out_dir;
    if (!args.out_override.empty()) out_dir = args.out_override;
    if (const char* env = std::getenv("SOFTDISTILL_OUT"); env != nullptr && *env != '\0')
        out_dir = env;
    cfg.out_dir = out_dir;
    fs::create_directories(out_dir);

    {
        std::ofstream echo(artifact(out_dir, "resolved_config.ini"));
        if (!echo) throw IoError("cannot open for writing: resolved_config.ini");
        echo << render_config(cfg);
    }

    if (args.command == "gen-data") {
        cmd_gen_data(cfg, out_dir);
    } else if (args.command == "train-teacher") {
        cmd_train_teacher(cfg, out_dir);
    } else if (args.command == "curate") {
        cmd_curate(cfg, out_dir);
    } else if (args.command == "distill") {
        cmd_distill(cfg, out_dir);
    } else if (args.command == "finetune") {
        cmd_finetune(cfg, out_dir);
    } else if (args.command == "evaluate") {
        cmd_evaluate(cfg, out_dir);
    } else if (args.command == "sweep") {
        run_sweep(cfg, out_dir, args.jobs);
        std::cout << "sweep: complete\n";
    } else if (args.command == "plot") {
        cmd_plot(cfg, out_dir);
    } else {
        throw ConfigError("unknown command \"" + args.command + "\"");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    try {
        return dispatch(parse_args(argc, argv));
    } catch (const TeacherQualityError& e) {
        std::cerr << "softdistill: error: teacher-quality: " << e.what() << "\n";
        return 4;
    } catch (const DependencyError& e) {
        std::cerr << "softdistill: error: dependency: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "softdistill: error: config: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "softdistill: error: io: " << e.what() << "\n";
        return 5;
    } catch (const std::invalid_argument& e) {
        std::cerr << "softdistill: error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "softdistill: error: " << e.what() << "\n";
        return 1;
    }
}
