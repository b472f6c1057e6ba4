// Acceptance harness for the distillation laboratory.
//
// Each criterion below runs one self-contained experiment against the library
// (criterion 10 additionally drives the installed CLI binary) and prints a
// single PASS/FAIL line with the measured values and the tolerance that
// judged them. Tolerances are fixed constants next to the assertions they
// govern. The process exits nonzero if any criterion fails.
//
// Shared fixtures: one synthetic task (10 classes, 32 dims, 2000 labeled
// training rows, 2000 validation rows, 20000-row unlabeled gallery) and one
// reference teacher are trained once and reused by the experiments that need
// them; later criteria report a failure rather than silently skipping when a
// prerequisite experiment did not complete.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "softdistill/config.h"
#include "softdistill/curation.h"
#include "softdistill/dataset.h"
#include "softdistill/grad_check.h"
#include "softdistill/losses.h"
#include "softdistill/mlp.h"
#include "softdistill/optim.h"
#include "softdistill/pipeline.h"
#include "softdistill/rng.h"
#include "softdistill/schedule.h"
#include "softdistill/tensor.h"
#include "softdistill/text.h"

using namespace softdistill;
namespace fs = std::filesystem;

namespace {

// ----------------------------------------------------------------- reporting

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("CRITERION %2d/11: %s — %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int id, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [pass, detail] = body();
        report(id, pass, detail);
    } catch (const std::exception& e) {
        report(id, false, std::string("unexpected exception: ") + e.what());
    }
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// Display helpers; assertions always use the raw doubles.
std::string s4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string sg(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("acceptance: cannot read " + p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

// ------------------------------------------------------- experiment settings

// The laboratory task. class_mean_scale is raised from the generator default
// (0.5) to 0.6 so the Bayes ceiling (0.9175 on this draw) leaves room for a
// teacher in the required [0.85, Bayes) window.
SyntheticConfig lab_dataset() {
    SyntheticConfig cfg;
    cfg.class_mean_scale = 0.6;
    cfg.seed = 0;
    return cfg;
}

MlpSpec teacher_shape() { return {32, {256, 256}, 10}; }
MlpSpec student_shape() { return {32, {32}, 10}; }
MlpSpec wide_teacher_shape() { return {32, {384, 384}, 10}; }

TrainConfig teacher_settings() {
    TrainConfig cfg;
    cfg.loss = LossKind::kHardCE;
    cfg.base_lr = 0.1;
    cfg.weight_decay = 1e-4;
    cfg.epochs = 200;
    cfg.warmup_epochs = 5;
    cfg.batch_size = 64;
    cfg.seed = 0;
    cfg.eval_every = 25;
    return cfg;
}

// One epoch, no warmup: a deliberately undertrained teacher.
TrainConfig weak_teacher_settings() {
    TrainConfig cfg = teacher_settings();
    cfg.epochs = 1;
    cfg.warmup_epochs = 0;
    cfg.eval_every = 1;
    return cfg;
}

// Wider and trained 1.5x longer with heavier decay: the overtrained teacher.
TrainConfig wide_teacher_settings() {
    TrainConfig cfg = teacher_settings();
    cfg.epochs = 300;
    cfg.weight_decay = 3e-4;
    return cfg;
}

TrainConfig distill_settings(std::uint64_t seed, double weight_decay = 1e-4) {
    TrainConfig cfg;
    cfg.loss = LossKind::kJsDiv;
    cfg.base_lr = 0.1;
    cfg.weight_decay = weight_decay;
    cfg.epochs = 240;
    cfg.warmup_epochs = 5;
    cfg.batch_size = 64;
    cfg.seed = seed;
    cfg.eval_every = 60;
    return cfg;
}

TrainConfig finetune_settings(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.loss = LossKind::kHardCE;
    cfg.base_lr = 0.01;
    cfg.weight_decay = 1e-4;
    cfg.epochs = 10;
    cfg.warmup_epochs = 0;
    cfg.batch_size = 64;
    cfg.seed = seed;
    cfg.eval_every = 5;
    return cfg;
}

// Hard-label comparison arm: same budget as distill + finetune (240 + 10).
TrainConfig baseline_settings(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.loss = LossKind::kHardCE;
    cfg.base_lr = 0.1;
    cfg.weight_decay = 1e-4;
    cfg.epochs = 250;
    cfg.warmup_epochs = 5;
    cfg.batch_size = 64;
    cfg.seed = seed;
    cfg.eval_every = 50;
    return cfg;
}

constexpr std::uint64_t kSeeds = 5;
constexpr double kTauSim = 0.995;
constexpr int kTopK = 800;

// --------------------------------------------------------------- shared state

struct Lab {
    SyntheticBundle bundle;
    double bayes = 0.0;
    ModelParams teacher;
    double teacher_acc = 0.0;
    UnlabeledGallery curated;
    CurationReport curation;
    // Soft-target runs on the default teacher (js_div, 240 epochs, decay
    // 1e-4, seeds 0..4): reused as the |U|=8000 volume arm, the beta=1e-4
    // decay arm, the default column of the teacher-quality grid, and the
    // artifact source for the label-blindness check.
    std::vector<TrainResult> distilled;
    std::vector<double> distill_ft_acc;  // after the hard-label finetune
    bool ready = false;
};

Lab g_lab;

const Lab& lab() {
    if (!g_lab.ready) throw std::runtime_error("criterion 4 prerequisites unavailable");
    return g_lab;
}

ModelParams params_with_slot(const ModelParams& base, std::size_t slot, const Tensor& t) {
    ModelParams m = clone_params(base);
    if (slot < m.weights.size()) {
        m.weights[slot] = t;
    } else {
        m.biases[slot - m.weights.size()] = t;
    }
    return m;
}

// --------------------------------------------------------------- criterion 1

std::pair<bool, std::string> criterion1_gradients() {
    constexpr double kTol = 1e-4;    // max relative error, tape vs central FD
    constexpr double kStep = 1e-5;   // finite-difference half step
    constexpr double kBudget = 10.0; // seconds
    const double t0 = now_seconds();

    double worst = 0.0;
    int checks = 0;
    const std::vector<MlpSpec> shapes = {{5, {9}, 4}, {7, {16, 12}, 6}};
    for (std::size_t si = 0; si < shapes.size(); ++si) {
        const MlpSpec& spec = shapes[si];
        Rng rng = Rng::stream(41, "acceptance-grad", si);
        ModelParams params = init_mlp(spec, rng);

        const int n = 8;
        std::vector<double> xv(static_cast<std::size_t>(n) * spec.input_dim);
        for (double& v : xv) v = rng.next_uniform(-1.5, 1.5);
        const Tensor x = Tensor::from_data({n, spec.input_dim}, std::move(xv));

        std::vector<int> labels(n);
        for (int& l : labels) l = static_cast<int>(rng.next_below(spec.output_dim));

        std::vector<double> tv(static_cast<std::size_t>(n) * spec.output_dim);
        for (double& v : tv) v = rng.next_uniform(-2.0, 2.0);
        softmax_rows(tv, n, spec.output_dim);
        const Tensor targets = Tensor::from_data({n, spec.output_dim}, std::move(tv));

        const std::size_t slots = params.weights.size() + params.biases.size();
        for (LossKind kind : {LossKind::kHardCE, LossKind::kSoftCE, LossKind::kJsDiv}) {
            for (double l2 : {0.0, 0.05}) {
                for (std::size_t slot = 0; slot < slots; ++slot) {
                    const Tensor& point = slot < params.weights.size()
                                              ? params.weights[slot]
                                              : params.biases[slot - params.weights.size()];
                    auto f = [&](const Tensor& t) {
                        ModelParams m = params_with_slot(params, slot, t);
                        Tensor loss_value = [&] {
                            const Tensor logits = forward(m, x);
                            switch (kind) {
                                case LossKind::kHardCE: return cross_entropy_hard(logits, labels);
                                case LossKind::kSoftCE: return soft_cross_entropy(logits, targets);
                                default: return js_divergence(logits, targets);
                            }
                        }();
                        if (l2 > 0.0) {
                            for (const Tensor& w : m.weights) {
                                loss_value = add(loss_value, scale(sum(mul(w, w)), 0.5 * l2));
                            }
                        }
                        return loss_value;
                    };
                    worst = std::max(worst, grad_check(f, point, kStep).max_rel_err);
                    ++checks;
                }
            }
        }
    }
    const double secs = now_seconds() - t0;
    const bool pass = worst < kTol && secs < kBudget;
    return {pass, "tape gradients vs central differences (h=1e-5): max rel err " + sg(worst) +
                      " (tolerance 1e-4) over " + std::to_string(checks) +
                      " parameter-tensor checks, losses hard_ce/soft_ce/js_div each with and "
                      "without L2; " +
                      sg(secs) + "s (budget 10s)"};
}

// --------------------------------------------------------------- criterion 2

std::pair<bool, std::string> criterion2_loss_properties() {
    constexpr double kTight = 1e-12;
    constexpr double kOracleTol = 1e-9;
    // 0.5*KL(p||m) + 0.5*KL(q||m) at p=[1,0], q=[1/2,1/2], m=[3/4,1/4],
    // evaluated from the definition at full precision.
    constexpr double kJsOracle = 0.21576155433883565;
    constexpr int kTrials = 10000;
    const double ln2 = std::log(2.0);

    Rng rng = Rng::stream(7, "acceptance-loss-props");
    auto random_prob = [&rng](int k, bool allow_zero) {
        std::vector<double> p(static_cast<std::size_t>(k));
        for (double& v : p) v = 0.05 + rng.next_unit();
        if (allow_zero && rng.next_unit() < 0.25) p[rng.next_below(k)] = 0.0;
        double s = 0.0;
        for (double v : p) s += v;
        for (double& v : p) v /= s;
        return p;
    };

    double worst_sym = 0.0, worst_low = 0.0, worst_high = 0.0, worst_self = 0.0;
    double worst_soft = 0.0, worst_hard = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(9));
        const std::vector<double> p = random_prob(k, true);
        const std::vector<double> q = random_prob(k, true);

        const double js = js_from_probs(p, q);
        worst_sym = std::max(worst_sym, std::fabs(js - js_from_probs(q, p)));
        worst_low = std::max(worst_low, -js);
        worst_high = std::max(worst_high, js - ln2);
        worst_self = std::max(worst_self, js_from_probs(p, p));

        // Against itself, soft cross entropy reduces to the target entropy.
        const std::vector<double> qq = random_prob(k, false);
        std::vector<double> logq(qq.size());
        for (std::size_t i = 0; i < qq.size(); ++i) logq[i] = std::log(qq[i]);
        const Tensor soft = soft_cross_entropy(Tensor::from_data({1, k}, std::move(logq)),
                                               Tensor::from_data({1, k}, qq));
        worst_soft = std::max(worst_soft, std::fabs(soft.value() - entropy_nats(qq)));

        // Equal logits make every class equally likely: hard CE = ln k.
        const double c = rng.next_uniform(-3.0, 3.0);
        const Tensor flat = Tensor::from_data(
            {1, k}, std::vector<double>(static_cast<std::size_t>(k), c));
        const std::vector<int> label = {static_cast<int>(rng.next_below(k))};
        worst_hard = std::max(
            worst_hard, std::fabs(cross_entropy_hard(flat, label).value() - std::log(double(k))));
    }

    const double oracle_err =
        std::fabs(js_from_probs(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) -
                  kJsOracle);

    const bool pass = worst_sym <= kTight && worst_low <= kTight && worst_high <= kTight &&
                      worst_self < kTight && worst_soft <= kTight && worst_hard <= kTight &&
                      oracle_err <= kOracleTol;
    return {pass, std::to_string(kTrials) + " random trials: JS asymmetry " + sg(worst_sym) +
                      ", range overshoot " + sg(std::max(worst_low, worst_high)) +
                      ", JS(p,p) " + sg(worst_self) + ", softCE(q,q)-entropy " + sg(worst_soft) +
                      ", uniform hardCE-lnK " + sg(worst_hard) +
                      " (all vs 1e-12); JS([1,0],[1/2,1/2]) off oracle by " + sg(oracle_err) +
                      " (tolerance 1e-9)"};
}

// --------------------------------------------------------------- criterion 3

std::pair<bool, std::string> criterion3_schedule() {
    constexpr double kTol = 1e-12;
    struct Combo {
        double base;
        int warmup_epochs, total_epochs, steps_per_epoch;
    };
    // Chosen so the post-warmup span W..S has an exact integer midpoint.
    const std::vector<Combo> combos = {{0.1, 5, 105, 1}, {0.02, 3, 23, 4}, {1.0, 1, 11, 10}};

    double worst = 0.0;
    for (const Combo& c : combos) {
        const ScheduleConfig cfg{c.base, c.warmup_epochs, c.total_epochs, c.steps_per_epoch};
        const int w = c.warmup_epochs * c.steps_per_epoch;
        const int s = c.total_epochs * c.steps_per_epoch;
        worst = std::max(worst, std::fabs(lr_at(cfg, w) - c.base));
        worst = std::max(worst, std::fabs(lr_at(cfg, w + (s - w) / 2) - c.base / 2.0));
        worst = std::max(worst, std::fabs(lr_at(cfg, s)));
        for (int step = 0; step < w; ++step) {
            worst = std::max(worst,
                             std::fabs(lr_at(cfg, step) - c.base * (step + 1) / double(w)));
        }
    }
    return {worst <= kTol, "cosine anchors lr(W)=base, lr(W+(S-W)/2)=base/2, lr(S)=0 and linear "
                           "warmup across 3 schedules: max deviation " +
                               sg(worst) + " (tolerance 1e-12)"};
}

// --------------------------------------------------------------- criterion 4

std::pair<bool, std::string> criterion4_distillation_wins() {
    constexpr double kTeacherFloor = 0.85;
    constexpr double kMinGainPoints = 1.0;
    constexpr double kBudget = 300.0;  // seconds
    const double t0 = now_seconds();

    g_lab.bundle = generate_synthetic(lab_dataset());
    const LabeledDataset& train = g_lab.bundle.train;
    const LabeledDataset& val = g_lab.bundle.val;
    g_lab.bayes = bayes_accuracy(g_lab.bundle.oracle, val);

    TrainResult teacher_run = train_teacher(train, val, teacher_shape(), teacher_settings());
    g_lab.teacher = std::move(teacher_run.params);
    g_lab.teacher_acc = evaluate(g_lab.teacher, val).accuracy;

    auto [curated, curation] =
        curate(g_lab.bundle.gallery, val, g_lab.teacher, {kTauSim, kTopK});
    g_lab.curated = std::move(curated);
    g_lab.curation = std::move(curation);

    std::vector<double> baseline_acc;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        g_lab.distilled.push_back(distill(g_lab.teacher, student_shape(), train, g_lab.curated,
                                          val, distill_settings(seed)));
        const TrainResult ft =
            finetune(g_lab.distilled.back().params, train, val, finetune_settings(seed));
        g_lab.distill_ft_acc.push_back(evaluate(ft.params, val).accuracy);

        const TrainResult hard = train_teacher(train, val, student_shape(),
                                               baseline_settings(seed));
        baseline_acc.push_back(evaluate(hard.params, val).accuracy);
    }
    g_lab.ready = true;

    const double gain_points = (mean(g_lab.distill_ft_acc) - mean(baseline_acc)) * 100.0;
    const double secs = now_seconds() - t0;
    const bool pass = g_lab.teacher_acc >= kTeacherFloor && g_lab.teacher_acc < g_lab.bayes &&
                      g_lab.curated.size() == 8000 && gain_points >= kMinGainPoints &&
                      secs < kBudget;
    return {pass, "teacher val acc " + s4(g_lab.teacher_acc) + " in [0.85, Bayes " +
                      s4(g_lab.bayes) + "); distill(|U|=" + std::to_string(g_lab.curated.size()) +
                      ")+finetune mean " + s4(mean(g_lab.distill_ft_acc)) +
                      " vs equal-budget hard baseline " + s4(mean(baseline_acc)) + " over " +
                      std::to_string(kSeeds) + " seeds: +" + sg(gain_points) +
                      "pt (needs >= 1.0pt); " + sg(secs) + "s (budget 300s)"};
}

// --------------------------------------------------------------- criterion 5

std::pair<bool, std::string> criterion5_volume_trend() {
    constexpr double kStepTolerance = 0.005;  // accuracy points 0.5, as fraction
    const Lab& l = lab();
    const std::vector<int> volumes = {0, 2000, 4000, 8000};

    std::vector<double> means;
    for (int volume : volumes) {
        std::vector<double> accs;
        if (volume == 8000) {
            accs = l.distill_ft_acc;  // reuse the criterion-4 arm
        } else {
            UnlabeledGallery curated_v;
            if (volume == 0) {
                curated_v.name = "curated";
                curated_v.dim = l.bundle.gallery.dim;
            } else {
                const int per_class = volume / lab_dataset().num_classes;
                curated_v = curate(l.bundle.gallery, l.bundle.val, l.teacher,
                                   {kTauSim, per_class})
                                .first;
                if (curated_v.size() != volume) {
                    return {false, "curation produced |U|=" + std::to_string(curated_v.size()) +
                                       " instead of " + std::to_string(volume)};
                }
            }
            for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
                const TrainResult d = distill(l.teacher, student_shape(), l.bundle.train,
                                              curated_v, l.bundle.val, distill_settings(seed));
                const TrainResult ft =
                    finetune(d.params, l.bundle.train, l.bundle.val, finetune_settings(seed));
                accs.push_back(evaluate(ft.params, l.bundle.val).accuracy);
            }
        }
        means.push_back(mean(accs));
    }

    bool pass = true;
    std::ostringstream table;
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (i > 0) {
            pass = pass && means[i] >= means[i - 1] - kStepTolerance;
            table << ", ";
        }
        table << volumes[i] << "->" << s4(means[i]);
    }
    return {pass, "mean val acc (" + std::to_string(kSeeds) + " seeds) by |U|: " + table.str() +
                      "; nondecreasing within 0.5pt per step"};
}

// --------------------------------------------------------------- criterion 6

struct DecayArm {
    double beta = 0.0;
    std::vector<double> final_loss;       // per seed, last logged training loss
    std::vector<ModelParams> params;      // per seed, end-of-training student
};

std::vector<DecayArm> g_decay_arms;  // filled by criterion 6, reused by 9

std::pair<bool, std::string> criterion6_decay_trend() {
    const Lab& l = lab();
    const std::vector<double> betas = {3e-4, 1e-4, 3e-5};  // descending
    constexpr std::uint64_t kDecaySeeds = 3;

    g_decay_arms.clear();
    for (double beta : betas) {
        DecayArm arm;
        arm.beta = beta;
        for (std::uint64_t seed = 0; seed < kDecaySeeds; ++seed) {
            if (beta == 1e-4) {
                arm.final_loss.push_back(l.distilled[seed].metrics.back().train_loss);
                arm.params.push_back(clone_params(l.distilled[seed].params));
            } else {
                TrainResult d = distill(l.teacher, student_shape(), l.bundle.train, l.curated,
                                        l.bundle.val, distill_settings(seed, beta));
                arm.final_loss.push_back(d.metrics.back().train_loss);
                arm.params.push_back(std::move(d.params));
            }
        }
        g_decay_arms.push_back(std::move(arm));
    }

    std::ostringstream table;
    std::vector<double> ms;
    for (const DecayArm& arm : g_decay_arms) {
        ms.push_back(mean(arm.final_loss));
        table << (table.tellp() > 0 ? ", " : "") << format_double(arm.beta) << "->"
              << sg(ms.back());
    }
    const bool pass = ms[0] > ms[1] && ms[1] > ms[2];
    return {pass, "mean final logged training loss (" + std::to_string(kDecaySeeds) +
                      " seeds) by decay: " + table.str() +
                      "; strictly decreasing as decay shrinks"};
}

// --------------------------------------------------------------- criterion 7

std::pair<bool, std::string> criterion7_teacher_saturation() {
    constexpr double kTrailPoints = 1.0;   // weakest-teacher student must trail by this
    constexpr double kAgreePoints = 0.5;   // top-two-teacher students must agree within this
    const Lab& l = lab();
    const LabeledDataset& train = l.bundle.train;
    const LabeledDataset& val = l.bundle.val;

    const TrainResult weak_run = train_teacher(train, val, teacher_shape(),
                                               weak_teacher_settings());
    const double weak_acc = evaluate(weak_run.params, val).accuracy;
    const TrainResult wide_run = train_teacher(train, val, wide_teacher_shape(),
                                               wide_teacher_settings());
    const double wide_acc = evaluate(wide_run.params, val).accuracy;

    // Pure soft-target students, one curated set per teacher, shared budgets.
    auto students_of = [&](const ModelParams& teacher) {
        const UnlabeledGallery curated = curate(l.bundle.gallery, val, teacher,
                                                {kTauSim, kTopK})
                                             .first;
        std::vector<double> accs;
        for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
            const TrainResult d = distill(teacher, student_shape(), train, curated, val,
                                          distill_settings(seed));
            accs.push_back(evaluate(d.params, val).accuracy);
        }
        return mean(accs);
    };
    const double weak_students = students_of(weak_run.params);
    std::vector<double> mid_accs;
    for (const TrainResult& d : l.distilled) {
        mid_accs.push_back(evaluate(d.params, val).accuracy);
    }
    const double mid_students = mean(mid_accs);
    const double wide_students = students_of(wide_run.params);

    const double best = std::max({weak_students, mid_students, wide_students});
    const double trail_points = (best - weak_students) * 100.0;
    const double agree_points = std::fabs(mid_students - wide_students) * 100.0;
    const bool teachers_ordered = weak_acc < l.teacher_acc && l.teacher_acc < wide_acc;
    const bool pass = teachers_ordered && trail_points >= kTrailPoints &&
                      agree_points <= kAgreePoints;
    return {pass, "teachers " + s4(weak_acc) + " < " + s4(l.teacher_acc) + " < " + s4(wide_acc) +
                      " (1-epoch / default / wider+longer); student means " + s4(weak_students) +
                      " / " + s4(mid_students) + " / " + s4(wide_students) + " (" +
                      std::to_string(kSeeds) + " seeds): weakest trails by " + sg(trail_points) +
                      "pt (needs >= 1pt), top two differ by " + sg(agree_points) +
                      "pt (allowed <= 0.5pt)"};
}

// --------------------------------------------------------------- criterion 8

std::pair<bool, std::string> criterion8_curation_exactness() {
    const Lab& l = lab();
    const LabeledDataset& val = l.bundle.val;

    // Fairness, exhaustively: every selected row stays strictly below the
    // similarity threshold against every validation row.
    auto cosine = [](std::span<const double> a, std::span<const double> b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0.0 || nb == 0.0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    double worst_cos = -1.0;
    for (int u = 0; u < l.curated.size(); ++u) {
        for (int v = 0; v < val.size(); ++v) {
            worst_cos = std::max(worst_cos, cosine(l.curated.row(u), val.row(v)));
        }
    }
    const bool fair = worst_cos < kTauSim;

    // Every planted validation copy is gone: reported removed and not selected.
    const std::unordered_set<std::int64_t> removed(l.curation.removed_ids.begin(),
                                                   l.curation.removed_ids.end());
    const std::unordered_set<std::int64_t> kept(l.curated.ids.begin(), l.curated.ids.end());
    bool planted_gone = !l.bundle.planted_duplicate_ids.empty();
    for (std::int64_t id : l.bundle.planted_duplicate_ids) {
        planted_gone = planted_gone && removed.count(id) == 1 && kept.count(id) == 0;
    }

    int per_class_max = 0, per_class_sum = 0;
    for (int count : l.curation.per_class_selected) {
        per_class_max = std::max(per_class_max, count);
        per_class_sum += count;
    }
    const bool counts_ok = per_class_max <= kTopK && per_class_sum == l.curation.selected;

    // Brute-force oracle on a 1000-row instance of the same gallery.
    UnlabeledGallery small;
    small.name = "small";
    small.dim = l.bundle.gallery.dim;
    const int kSmall = 1000;
    small.features.assign(l.bundle.gallery.features.begin(),
                          l.bundle.gallery.features.begin() + kSmall * small.dim);
    small.ids.assign(l.bundle.gallery.ids.begin(), l.bundle.gallery.ids.begin() + kSmall);
    const SoftLabelSet soft = score_gallery(l.teacher, small);
    const int kOracleK = 37;
    std::vector<std::vector<std::pair<double, std::int64_t>>> byclass(soft.num_classes);
    for (int i = 0; i < soft.size(); ++i) {
        byclass[soft.argmax[i]].push_back({soft.max_score[i], soft.ids[i]});
    }
    std::vector<std::int64_t> expected;
    for (auto& rows : byclass) {
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < rows.size() && i < kOracleK; ++i) {
            expected.push_back(rows[i].second);
        }
    }
    std::sort(expected.begin(), expected.end());
    const std::vector<std::int64_t> got = select_top_k_per_class(soft, kOracleK);
    const bool oracle_ok = !expected.empty() && got == expected;

    const bool pass = fair && planted_gone && counts_ok && oracle_ok;
    return {pass, "max selected-vs-validation cosine " + s4(worst_cos) + " < " +
                      format_double(kTauSim) + " over " + std::to_string(l.curated.size()) + "x" +
                      std::to_string(val.size()) + " pairs; " +
                      std::to_string(l.bundle.planted_duplicate_ids.size()) +
                      " planted duplicates all removed: " + (planted_gone ? "yes" : "NO") +
                      "; per-class max " + std::to_string(per_class_max) + " <= " +
                      std::to_string(kTopK) + "; 1000-row top-" + std::to_string(kOracleK) +
                      " equals brute-force sort (" + std::to_string(got.size()) +
                      " ids): " + (oracle_ok ? "exact" : "MISMATCH")};
}

// --------------------------------------------------------------- criterion 9

std::pair<bool, std::string> criterion9_bound_proxy() {
    // 2^d * prod ||W_j||_F / sqrt(m), checked exactly at d=2, norms {2,3}.
    ModelParams two_layer;
    two_layer.weights = {Tensor::from_data({1, 2}, {2.0, 0.0}),
                         Tensor::from_data({2, 1}, {3.0, 0.0})};
    two_layer.biases = {Tensor::zeros({2}), Tensor::zeros({1})};
    const double at_100 = generalization_bound_proxy(two_layer, 100);
    const double at_400 = generalization_bound_proxy(two_layer, 400);
    const bool exact = at_100 == 2.4 && at_400 == 1.2 && 2.0 * at_400 == at_100;

    // Lighter decay must leave larger weight norms, hence a larger proxy,
    // for every seed of the criterion-6 runs (whose loss ordering also held).
    if (g_decay_arms.size() != 3) throw std::runtime_error("criterion 6 runs unavailable");
    const Lab& l = lab();
    const std::int64_t m = l.bundle.train.size() + l.curated.size();
    bool ordered = true;
    std::vector<double> means(3, 0.0);
    for (std::size_t seed = 0; seed < g_decay_arms[0].params.size(); ++seed) {
        // Arms are stored in descending-decay order: 3e-4, 1e-4, 3e-5.
        const double hi = generalization_bound_proxy(g_decay_arms[0].params[seed], m);
        const double mid = generalization_bound_proxy(g_decay_arms[1].params[seed], m);
        const double lo = generalization_bound_proxy(g_decay_arms[2].params[seed], m);
        ordered = ordered && lo > mid && mid > hi;
        means[0] += hi / 3.0;
        means[1] += mid / 3.0;
        means[2] += lo / 3.0;
    }
    const bool pass = exact && ordered;
    return {pass, "norms [2,3], m=100 -> " + format_double(at_100) + " (expected 2.4, exact); "
                      "m=400 -> " + format_double(at_400) +
                      " (exactly half); trained-student proxy at m=10000 by decay 3e-4/1e-4/3e-5: " +
                      sg(means[0]) + " < " + sg(means[1]) + " < " + sg(means[2]) +
                      " per seed (3 seeds): " + (ordered ? "yes" : "NO")};
}

// -------------------------------------------------------------- criterion 10

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = "env -u SOFTDISTILL_OUT " SOFTDISTILL_CLI_PATH " " + args + " > " +
                            log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::pair<bool, std::string> criterion10_determinism() {
    const fs::path root = fs::temp_directory_path() /
                          ("softdistill_accept_" + std::to_string(::getpid()));
    fs::create_directories(root);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{root};

    const std::string ini_text =
        "[dataset]\n"
        "num_classes = 4\nextra_modes = 2\ndim = 8\nclass_mean_scale = 1.5\n"
        "train_size = 40\nval_size = 40\ngallery_size = 200\n"
        "duplicate_fraction = 0.05\nseed = 3\n\n"
        "[teacher]\nhidden = 16\nepochs = 4\nwarmup_epochs = 1\nbatch_size = 16\n\n"
        "[student]\nhidden = 8\n\n"
        "[curation]\ntop_k_per_class = 10\n\n"
        "[distill]\nloss = js_div\nepochs = 3\nwarmup_epochs = 1\nbatch_size = 16\n"
        "skip_quality_gate = 1\n\n"
        "[finetune]\nepochs = 2\nwarmup_epochs = 0\nbatch_size = 16\n";
    const fs::path ini = root / "lab.ini";
    std::ofstream(ini) << ini_text;
    const std::string base = "--config " + ini.string();
    const fs::path log = root / "cli.log";

    // Two independent runs of the whole pipeline from one config.
    for (const char* dir : {"a", "b"}) {
        for (const char* cmd : {"gen-data", "train-teacher", "curate", "distill", "finetune"}) {
            const int rc = run_cli(std::string(cmd) + " " + base + " --out " +
                                       (root / dir).string(),
                                   log);
            if (rc != 0) {
                return {false, std::string(cmd) + " exited " + std::to_string(rc) + ": " +
                                   slurp(log)};
            }
        }
    }
    bool identical = true;
    std::string first_diff;
    for (const char* name : {"train.bin", "val.bin", "gallery.bin", "teacher.ckpt",
                             "curated.bin", "student.ckpt", "student_finetuned.ckpt",
                             "metrics.csv"}) {
        if (!same_bytes(root / "a" / name, root / "b" / name)) {
            identical = false;
            if (first_diff.empty()) first_diff = name;
        }
    }

    // Interrupted-and-resumed teacher training must reproduce the
    // straight-through run, checkpoint bytes and metrics rows alike. The
    // interrupted state is built by replaying the documented update rule for
    // the first 2 of 4 epochs under the full 4-epoch schedule (the lr curve
    // depends on the total), then handed to the CLI to finish.
    const fs::path c = root / "c";
    bool resume_ok = run_cli("gen-data " + base + " --out " + c.string(), log) == 0;
    if (resume_ok) {
        const ExperimentConfig cfg = parse_config_text(ini_text, "acceptance");
        const LabeledDataset train = load_dataset((c / "train.bin").string());
        const MlpSpec spec = teacher_spec(cfg);
        Rng init = Rng::stream(cfg.teacher.seed, "init");
        ModelParams params = init_mlp(spec, init);
        OptimState optim = make_optim_state(params, cfg.teacher.momentum);
        const ScheduleConfig sched{cfg.teacher.base_lr, cfg.teacher.warmup_epochs,
                                   cfg.teacher.epochs, 1};
        for (int epoch = 0; epoch < 2; ++epoch) {
            const double lr = lr_at(sched, epoch);
            for (const auto& idx : batch_indices(train.size(), cfg.teacher.batch_size,
                                                 cfg.teacher.seed, epoch)) {
                tape_reset();
                zero_grad(params);
                std::vector<double> block(idx.size() * static_cast<std::size_t>(train.dim));
                std::vector<int> labels(idx.size());
                for (std::size_t bi = 0; bi < idx.size(); ++bi) {
                    std::copy_n(train.features.data() +
                                    static_cast<std::size_t>(idx[bi]) * train.dim,
                                train.dim, block.data() + bi * train.dim);
                    labels[bi] = train.labels[static_cast<std::size_t>(idx[bi])];
                }
                const Tensor x = Tensor::from_data(
                    {static_cast<int>(idx.size()), train.dim}, std::move(block));
                backward(cross_entropy_hard(forward(params, x), labels));
                sgd_momentum_step(params, optim, lr, cfg.teacher.weight_decay);
            }
            tape_reset();
        }
        Checkpoint half;
        half.spec = spec;
        half.params = std::move(params);
        half.optim = std::move(optim);
        half.stage = "teacher";
        half.epoch = 2;
        half.config_hash = training_hash(cfg);
        half.seed = cfg.teacher.seed;
        save_checkpoint((c / "teacher.ckpt").string(), half);
        resume_ok = run_cli("train-teacher " + base + " --out " + c.string(), log) == 0;
    }
    if (resume_ok) {
        resume_ok = same_bytes(c / "teacher.ckpt", root / "a" / "teacher.ckpt");
        // The resumed run logs epochs 3 and 4; its file must be the header
        // plus exactly the straight run's epoch-3 and epoch-4 rows.
        auto lines_of = [](const std::string& text) {
            std::vector<std::string> lines;
            std::istringstream in(text);
            for (std::string line; std::getline(in, line);) lines.push_back(line);
            return lines;
        };
        const std::vector<std::string> a_lines = lines_of(slurp(root / "a" / "metrics.csv"));
        const std::vector<std::string> c_lines = lines_of(slurp(c / "metrics.csv"));
        resume_ok = resume_ok && a_lines.size() >= 5 && c_lines.size() == 3 &&
                    c_lines[0] == a_lines[0] && c_lines[1] == a_lines[3] &&
                    c_lines[2] == a_lines[4];
    }

    // Binary containers round-trip bit-exactly through load/save.
    const LabeledDataset train_rt = load_dataset((root / "a" / "train.bin").string());
    save_dataset((root / "rt_train.bin").string(), train_rt);
    const UnlabeledGallery gal_rt = load_gallery((root / "a" / "gallery.bin").string());
    save_gallery((root / "rt_gallery.bin").string(), gal_rt);
    const Checkpoint cp_rt = load_checkpoint((root / "a" / "teacher.ckpt").string());
    save_checkpoint((root / "rt_teacher.ckpt").string(), cp_rt);
    const bool roundtrip = same_bytes(root / "a" / "train.bin", root / "rt_train.bin") &&
                           same_bytes(root / "a" / "gallery.bin", root / "rt_gallery.bin") &&
                           same_bytes(root / "a" / "teacher.ckpt", root / "rt_teacher.ckpt");

    const bool pass = identical && resume_ok && roundtrip;
    return {pass, std::string("independent reruns byte-identical across 8 artifacts: ") +
                      (identical ? "yes" : ("NO (first diff " + first_diff + ")")) +
                      "; resume(2+2 epochs) == straight 4-epoch run (checkpoint and metrics "
                      "bytes): " +
                      (resume_ok ? "yes" : "NO") +
                      "; dataset/gallery/checkpoint files round-trip bitwise: " +
                      (roundtrip ? "yes" : "NO")};
}

// -------------------------------------------------------------- criterion 11

std::pair<bool, std::string> criterion11_label_blindness() {
    const Lab& l = lab();

    LabeledDataset permuted = l.bundle.train;
    for (int& label : permuted.labels) label = (label + 3) % permuted.num_classes;

    const TrainResult& original = l.distilled[0];
    const TrainResult redone = distill(l.teacher, student_shape(), permuted, l.curated,
                                       l.bundle.val, distill_settings(0));

    const fs::path root = fs::temp_directory_path() /
                          ("softdistill_blind_" + std::to_string(::getpid()));
    fs::create_directories(root);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{root};

    auto write_artifacts = [&](const char* tag, const TrainResult& r) {
        Checkpoint cp;
        cp.spec = spec_of(r.params);
        cp.params = clone_params(r.params);
        cp.optim = r.optim;
        cp.stage = "distill";
        cp.epoch = distill_settings(0).epochs;
        cp.config_hash = 0;
        cp.seed = 0;
        save_checkpoint((root / (std::string(tag) + ".ckpt")).string(), cp);
        append_metrics_csv((root / (std::string(tag) + ".csv")).string(), r.metrics);
    };
    write_artifacts("original", original);
    write_artifacts("permuted", redone);

    const bool ckpt_same = same_bytes(root / "original.ckpt", root / "permuted.ckpt");
    const bool csv_same = same_bytes(root / "original.csv", root / "permuted.csv");
    const bool pass = ckpt_same && csv_same;
    return {pass, std::string("soft-target training rerun with every training label remapped "
                              "(l -> l+3 mod 10): student checkpoint bytes ") +
                      (ckpt_same ? "identical" : "DIFFER") + ", metrics bytes " +
                      (csv_same ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
    std::printf("softdistill acceptance: 11 criteria, shared synthetic task K=10 D=32 |T|=2000 "
                "|V|=2000 gallery=20000\n");
    std::fflush(stdout);
    const double t0 = now_seconds();

    run_criterion(1, criterion1_gradients);
    run_criterion(2, criterion2_loss_properties);
    run_criterion(3, criterion3_schedule);
    run_criterion(4, criterion4_distillation_wins);
    run_criterion(5, criterion5_volume_trend);
    run_criterion(6, criterion6_decay_trend);
    run_criterion(7, criterion7_teacher_saturation);
    run_criterion(8, criterion8_curation_exactness);
    run_criterion(9, criterion9_bound_proxy);
    run_criterion(10, criterion10_determinism);
    run_criterion(11, criterion11_label_blindness);

    std::printf("%d/11 criteria passed in %.1fs\n", 11 - g_failures, now_seconds() - t0);
    return g_failures == 0 ? 0 : 1;
}
