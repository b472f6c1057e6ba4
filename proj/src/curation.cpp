#include "softdistill/curation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "softdistill/errors.h"
#include "softdistill/losses.h"
#include "softdistill/text.h"

namespace softdistill {

namespace {

constexpr int kScoreBatch = 256;

double row_norm(const double* row, int dim) {
    double sq = 0.0;
    for (int d = 0; d < dim; ++d) sq += row[d] * row[d];
    return std::sqrt(sq);
}

}  // namespace

std::pair<UnlabeledGallery, std::vector<std::int64_t>> dedup_against_validation(
    const UnlabeledGallery& gallery, const LabeledDataset& val, const CurationConfig& cfg) {
    if (gallery.dim != val.dim)
        throw ShapeError("dedup: gallery and validation dimensions differ");
    if (cfg.similarity_threshold <= 0.0 || cfg.similarity_threshold > 1.0)
        throw std::invalid_argument("dedup: similarity threshold must lie in (0, 1]");

    const int dim = gallery.dim;
    std::vector<double> val_norms(val.size());
    for (int j = 0; j < val.size(); ++j) val_norms[j] = row_norm(val.row(j).data(), dim);

    UnlabeledGallery kept;
    kept.name = gallery.name;
    kept.dim = dim;
    std::vector<std::int64_t> removed;

    for (int i = 0; i < gallery.size(); ++i) {
        const double* g = gallery.row(i).data();
        const double g_norm = row_norm(g, dim);
        bool duplicate = false;
        if (g_norm > 0.0) {
            for (int j = 0; j < val.size(); ++j) {
                if (val_norms[j] == 0.0) continue;
                double dot = 0.0;
                const double* v = val.row(j).data();
                for (int d = 0; d < dim; ++d) dot += g[d] * v[d];
                if (dot / (g_norm * val_norms[j]) >= cfg.similarity_threshold) {
                    duplicate = true;
                    break;
                }
            }
        }
        if (duplicate) {
            removed.push_back(gallery.ids[i]);
        } else {
            kept.features.insert(kept.features.end(), g, g + dim);
            kept.ids.push_back(gallery.ids[i]);
        }
    }
    return {std::move(kept), std::move(removed)};
}

SoftLabelSet score_gallery(const ModelParams& teacher, const UnlabeledGallery& gallery) {
    if (teacher.weights.empty() || teacher.weights.front().rows() != gallery.dim)
        throw ShapeError("score_gallery: teacher input dimension mismatch");

    // Detached copy so scoring never records on the tape, whatever the
    // caller's parameter flags are.
    const ModelParams frozen = clone_params(teacher);
    const int k = frozen.weights.back().cols();
    const int n = gallery.size();

    SoftLabelSet soft;
    soft.num_classes = k;
    soft.ids = gallery.ids;
    soft.probs.resize(static_cast<std::size_t>(n) * k);
    soft.argmax.resize(n);
    soft.max_score.resize(n);

    for (int start = 0; start < n; start += kScoreBatch) {
        const int count = std::min(kScoreBatch, n - start);
        std::vector<double> block(
            gallery.features.begin() + static_cast<std::size_t>(start) * gallery.dim,
            gallery.features.begin() + static_cast<std::size_t>(start + count) * gallery.dim);
        Tensor x = Tensor::from_data({count, gallery.dim}, block, /*requires_grad=*/false);
        Tensor logits = forward(frozen, x);
        std::vector<double> rows(logits.values().begin(), logits.values().end());
        softmax_rows(rows, count, k);
        std::copy(rows.begin(), rows.end(),
                  soft.probs.begin() + static_cast<std::size_t>(start) * k);
    }

    for (int i = 0; i < n; ++i) {
        const auto row = soft.row(i);
        const int best = argmax_row(row);
        soft.argmax[i] = best;
        soft.max_score[i] = row[best];
    }
    return soft;
}

std::vector<std::int64_t> select_top_k_per_class(const SoftLabelSet& soft, int k) {
    if (k < 0) throw std::invalid_argument("select_top_k: k must be >= 0");
    if (k == 0) return {};

    std::vector<std::vector<int>> by_class(soft.num_classes);
    for (int i = 0; i < soft.size(); ++i) by_class[soft.argmax[i]].push_back(i);

    std::vector<std::int64_t> selected;
    for (auto& members : by_class) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            if (soft.max_score[a] != soft.max_score[b])
                return soft.max_score[a] > soft.max_score[b];
            return soft.ids[a] < soft.ids[b];
        });
        const int take = std::min<int>(k, static_cast<int>(members.size()));
        for (int j = 0; j < take; ++j) selected.push_back(soft.ids[members[j]]);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

std::pair<UnlabeledGallery, CurationReport> curate(const UnlabeledGallery& gallery,
                                                   const LabeledDataset& val,
                                                   const ModelParams& teacher,
                                                   const CurationConfig& cfg) {
    auto [filtered, removed] = dedup_against_validation(gallery, val, cfg);
    const SoftLabelSet soft = score_gallery(teacher, filtered);
    const std::vector<std::int64_t> chosen = select_top_k_per_class(soft, cfg.top_k_per_class);

    CurationReport report;
    report.gallery_in = gallery.size();
    report.removed_duplicates = static_cast<int>(removed.size());
    report.after_dedup = filtered.size();
    report.selected = static_cast<int>(chosen.size());
    report.removed_ids = removed;
    report.per_class_selected.assign(soft.num_classes, 0);
    report.min_selected_score.assign(soft.num_classes, -1.0);

    std::unordered_set<std::int64_t> chosen_set(chosen.begin(), chosen.end());
    UnlabeledGallery curated;
    curated.name = "curated";
    curated.dim = filtered.dim;
    for (int i = 0; i < filtered.size(); ++i) {
        if (!chosen_set.count(filtered.ids[i])) continue;
        const auto row = filtered.row(i);
        curated.features.insert(curated.features.end(), row.begin(), row.end());
        curated.ids.push_back(filtered.ids[i]);
        const int cls = soft.argmax[i];
        report.per_class_selected[cls] += 1;
        const double score = soft.max_score[i];
        if (report.min_selected_score[cls] < 0.0 || score < report.min_selected_score[cls])
            report.min_selected_score[cls] = score;
    }
    return {std::move(curated), std::move(report)};
}

void write_curation_report(const std::string& path, const CurationReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "[counts]\n";
    out << "gallery_in = " << report.gallery_in << "\n";
    out << "removed_duplicates = " << report.removed_duplicates << "\n";
    out << "after_dedup = " << report.after_dedup << "\n";
    out << "selected = " << report.selected << "\n";
    out << "\n[per_class]\n";
    for (std::size_t c = 0; c < report.per_class_selected.size(); ++c) {
        out << "class_" << c << " = " << report.per_class_selected[c] << ", min_score = ";
        if (report.min_selected_score[c] < 0.0)
            out << "n/a";
        else
            out << format_double(report.min_selected_score[c]);
        out << "\n";
    }
    out << "\n[removed_duplicate_ids]\n";
    for (std::int64_t id : report.removed_ids) out << id << "\n";
    out.close();
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace softdistill
