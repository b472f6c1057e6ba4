// Python bindings for the distillation core: synthetic data, MLP inference,
// the training stages (teacher / distill / finetune), gallery curation, and
// the scalar numerics (schedule, divergences). Heavy lifting stays in C++;
// python sees plain lists and small value classes.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "softdistill/curation.h"
#include "softdistill/dataset.h"
#include "softdistill/errors.h"
#include "softdistill/losses.h"
#include "softdistill/mlp.h"
#include "softdistill/pipeline.h"
#include "softdistill/rng.h"
#include "softdistill/schedule.h"
#include "softdistill/tensor.h"

namespace py = pybind11;
using namespace softdistill;

namespace {

// Parameter bundle with its architecture; python never sees raw tensors.
struct Model {
    MlpSpec spec;
    ModelParams params;
};

Model wrap_params(const ModelParams& params) {
    return Model{spec_of(params), clone_params(params)};
}

Tensor batch_from_rows(const Model& model, const std::vector<std::vector<double>>& rows) {
    const int dim = model.spec.input_dim;
    std::vector<double> flat;
    flat.reserve(rows.size() * static_cast<std::size_t>(dim));
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != dim) {
            throw ShapeError("predict: row width " + std::to_string(row.size()) +
                             " does not match input_dim " + std::to_string(dim));
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return Tensor::from_data({static_cast<int>(rows.size()), dim}, std::move(flat));
}

std::vector<std::vector<double>> predict_proba(const Model& model,
                                               const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    tape_reset();
    Tensor logits = forward(model.params, batch_from_rows(model, rows));
    const int n = logits.rows(), k = logits.cols();
    std::vector<double> vals(logits.values().begin(), logits.values().end());
    softmax_rows(vals, n, k);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* row = vals.data() + static_cast<std::size_t>(i) * k;
        out[static_cast<std::size_t>(i)].assign(row, row + k);
    }
    return out;
}

std::vector<int> predict(const Model& model, const std::vector<std::vector<double>>& rows) {
    std::vector<int> labels;
    for (const auto& p : predict_proba(model, rows)) labels.push_back(argmax_row(p));
    return labels;
}

void check_probs(const std::vector<double>& p, const char* who) {
    double s = 0.0;
    for (double v : p) {
        if (v < 0.0) throw std::invalid_argument(std::string(who) + ": negative probability");
        s += v;
    }
    if (s < 1.0 - 1e-6 || s > 1.0 + 1e-6) {
        throw std::invalid_argument(std::string(who) + ": probabilities must sum to 1");
    }
}

}  // namespace

PYBIND11_MODULE(_softdistill, m) {
    m.doc() = "Label-free distillation laboratory (C++ core)";

    py::register_exception<IoError>(m, "IoError");
    py::register_exception<FormatError>(m, "FormatError");
    py::register_exception<TruncatedError>(m, "TruncatedError");
    py::register_exception<VersionError>(m, "VersionError");
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
    py::register_exception<TeacherQualityError>(m, "TeacherQualityError");
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DependencyError>(m, "DependencyError");

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def(py::init<>())
        .def_readwrite("name", &LabeledDataset::name)
        .def_readonly("dim", &LabeledDataset::dim)
        .def_readonly("num_classes", &LabeledDataset::num_classes)
        .def_readonly("labels", &LabeledDataset::labels)
        .def("__len__", &LabeledDataset::size)
        .def("row", [](const LabeledDataset& d, int i) {
            if (i < 0 || i >= d.size()) throw py::index_error();
            auto r = d.row(i);
            return std::vector<double>(r.begin(), r.end());
        });

    py::class_<UnlabeledGallery>(m, "UnlabeledGallery")
        .def(py::init<>())
        .def_readwrite("name", &UnlabeledGallery::name)
        .def_readonly("dim", &UnlabeledGallery::dim)
        .def_readonly("ids", &UnlabeledGallery::ids)
        .def("__len__", &UnlabeledGallery::size)
        .def("row", [](const UnlabeledGallery& g, int i) {
            if (i < 0 || i >= g.size()) throw py::index_error();
            auto r = g.row(i);
            return std::vector<double>(r.begin(), r.end());
        });

    py::class_<SyntheticConfig>(m, "SyntheticConfig")
        .def(py::init<>())
        .def_readwrite("num_classes", &SyntheticConfig::num_classes)
        .def_readwrite("extra_modes", &SyntheticConfig::extra_modes)
        .def_readwrite("dim", &SyntheticConfig::dim)
        .def_readwrite("class_mean_scale", &SyntheticConfig::class_mean_scale)
        .def_readwrite("within_stddev", &SyntheticConfig::within_stddev)
        .def_readwrite("train_size", &SyntheticConfig::train_size)
        .def_readwrite("val_size", &SyntheticConfig::val_size)
        .def_readwrite("gallery_size", &SyntheticConfig::gallery_size)
        .def_readwrite("duplicate_fraction", &SyntheticConfig::duplicate_fraction)
        .def_readwrite("seed", &SyntheticConfig::seed);

    py::class_<SyntheticBundle>(m, "SyntheticBundle")
        .def_readonly("train", &SyntheticBundle::train)
        .def_readonly("val", &SyntheticBundle::val)
        .def_readonly("gallery", &SyntheticBundle::gallery)
        .def_readonly("planted_duplicate_ids", &SyntheticBundle::planted_duplicate_ids)
        .def("bayes_val_accuracy",
             [](const SyntheticBundle& b) { return bayes_accuracy(b.oracle, b.val); });

    m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
    m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));
    m.def("load_dataset", &load_dataset, py::arg("path"));
    m.def("save_gallery", &save_gallery, py::arg("path"), py::arg("gallery"));
    m.def("load_gallery", &load_gallery, py::arg("path"));
    m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"));

    py::class_<MlpSpec>(m, "MlpSpec")
        .def(py::init([](int input_dim, std::vector<int> hidden, int output_dim) {
                 return MlpSpec{input_dim, std::move(hidden), output_dim};
             }),
             py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"))
        .def_readwrite("input_dim", &MlpSpec::input_dim)
        .def_readwrite("hidden", &MlpSpec::hidden)
        .def_readwrite("output_dim", &MlpSpec::output_dim)
        .def("parameter_count", [](const MlpSpec& s) { return parameter_count(s); })
        .def("__eq__", [](const MlpSpec& a, const MlpSpec& b) { return a == b; });

    py::class_<Model>(m, "Model")
        .def_property_readonly("spec", [](const Model& mod) { return mod.spec; })
        .def("predict_proba", &predict_proba, py::arg("rows"))
        .def("predict", &predict, py::arg("rows"))
        .def("frobenius_norms", [](const Model& mod) { return frobenius_norms(mod.params); })
        .def("bound_proxy",
             [](const Model& mod, std::int64_t samples) {
                 return generalization_bound_proxy(mod.params, samples);
             },
             py::arg("samples"));

    m.def(
        "init_model",
        [](const MlpSpec& spec, std::uint64_t seed) {
            Rng rng = Rng::stream(seed, "init");
            return Model{spec, init_mlp(spec, rng)};
        },
        py::arg("spec"), py::arg("seed") = 0);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_property(
            "loss", [](const TrainConfig& c) { return std::string(loss_kind_name(c.loss)); },
            [](TrainConfig& c, const std::string& name) { c.loss = parse_loss_kind(name); })
        .def_readwrite("base_lr", &TrainConfig::base_lr)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("weight_decay", &TrainConfig::weight_decay)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("warmup_epochs", &TrainConfig::warmup_epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("eval_every", &TrainConfig::eval_every);

    py::class_<MetricsRecord>(m, "MetricsRecord")
        .def_readonly("stage", &MetricsRecord::stage)
        .def_readonly("epoch", &MetricsRecord::epoch)
        .def_readonly("train_loss", &MetricsRecord::train_loss)
        .def_readonly("val_acc", &MetricsRecord::val_acc)
        .def_readonly("val_loss", &MetricsRecord::val_loss)
        .def_readonly("lr", &MetricsRecord::lr)
        .def_readonly("bound_proxy", &MetricsRecord::bound_proxy)
        .def("__repr__", [](const MetricsRecord& r) {
            return "MetricsRecord(stage='" + r.stage + "', epoch=" + std::to_string(r.epoch) +
                   ", val_acc=" + std::to_string(r.val_acc) + ")";
        });

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("accuracy", &EvalResult::accuracy)
        .def_readonly("mean_loss", &EvalResult::mean_loss);

    py::class_<CurationReport>(m, "CurationReport")
        .def_readonly("gallery_in", &CurationReport::gallery_in)
        .def_readonly("removed_duplicates", &CurationReport::removed_duplicates)
        .def_readonly("after_dedup", &CurationReport::after_dedup)
        .def_readonly("selected", &CurationReport::selected)
        .def_readonly("removed_ids", &CurationReport::removed_ids)
        .def_readonly("per_class_selected", &CurationReport::per_class_selected)
        .def_readonly("min_selected_score", &CurationReport::min_selected_score);

    m.def(
        "train_teacher",
        [](const LabeledDataset& train, const LabeledDataset& val, const MlpSpec& spec,
           const TrainConfig& cfg) {
            TrainResult r = train_teacher(train, val, spec, cfg);
            return py::make_tuple(wrap_params(r.params), r.metrics);
        },
        py::arg("train"), py::arg("val"), py::arg("spec"), py::arg("config"));

    m.def(
        "curate",
        [](const UnlabeledGallery& gallery, const LabeledDataset& val, const Model& teacher,
           double similarity_threshold, int top_k_per_class) {
            CurationConfig cc{similarity_threshold, top_k_per_class};
            auto [curated, report] = curate(gallery, val, teacher.params, cc);
            return py::make_tuple(curated, report);
        },
        py::arg("gallery"), py::arg("val"), py::arg("teacher"),
        py::arg("similarity_threshold") = 0.995, py::arg("top_k_per_class") = 400);

    m.def(
        "distill",
        [](const Model& teacher, const MlpSpec& student_spec, const LabeledDataset& labeled,
           const UnlabeledGallery& curated, const LabeledDataset& val, const TrainConfig& cfg) {
            TrainResult r = distill(teacher.params, student_spec, labeled, curated, val, cfg);
            return py::make_tuple(wrap_params(r.params), r.metrics);
        },
        py::arg("teacher"), py::arg("student_spec"), py::arg("labeled"), py::arg("curated"),
        py::arg("val"), py::arg("config"));

    m.def(
        "finetune",
        [](const Model& student, const LabeledDataset& train, const LabeledDataset& val,
           const TrainConfig& cfg) {
            TrainResult r = finetune(student.params, train, val, cfg);
            return py::make_tuple(wrap_params(r.params), r.metrics);
        },
        py::arg("student"), py::arg("train"), py::arg("val"), py::arg("config"));

    m.def(
        "evaluate",
        [](const Model& model, const LabeledDataset& data) { return evaluate(model.params, data); },
        py::arg("model"), py::arg("data"));

    m.def(
        "teacher_quality",
        [](const Model& model, const LabeledDataset& val, double r0) {
            TeacherQuality q = assert_teacher_quality(model.params, val, r0);
            return py::make_tuple(q.pass, q.measured, q.threshold);
        },
        py::arg("model"), py::arg("val"), py::arg("r0") = 0.8);

    m.def(
        "load_model",
        [](const std::string& path) {
            Checkpoint cp = load_checkpoint(path);
            return py::make_tuple(wrap_params(cp.params), cp.stage, cp.epoch);
        },
        py::arg("path"));

    m.def(
        "lr_at",
        [](int step, double base_lr, int warmup_epochs, int total_epochs, int steps_per_epoch) {
            return lr_at(ScheduleConfig{base_lr, warmup_epochs, total_epochs, steps_per_epoch},
                         step);
        },
        py::arg("step"), py::arg("base_lr"), py::arg("warmup_epochs"), py::arg("total_epochs"),
        py::arg("steps_per_epoch") = 1);

    m.def(
        "js_divergence",
        [](const std::vector<double>& p, const std::vector<double>& q) {
            if (p.size() != q.size()) {
                throw std::invalid_argument("js_divergence: length mismatch");
            }
            check_probs(p, "js_divergence");
            check_probs(q, "js_divergence");
            return js_from_probs(p, q);
        },
        py::arg("p"), py::arg("q"));

    m.def(
        "entropy",
        [](const std::vector<double>& p) {
            check_probs(p, "entropy");
            return entropy_nats(p);
        },
        py::arg("p"));

    m.def(
        "softmax",
        [](std::vector<double> logits) {
            if (logits.size() < 2) throw std::invalid_argument("softmax: need at least 2 entries");
            softmax_rows(logits, 1, static_cast<int>(logits.size()));
            return logits;
        },
        py::arg("logits"));
}
