#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "softdistill/dataset.h"
#include "softdistill/mlp.h"

namespace softdistill {

struct CurationConfig {
    double similarity_threshold = 0.995;  // cosine; remove at >= threshold
    int top_k_per_class = 400;
};

// Teacher predictions over a sample set: probability rows plus the derived
// argmax class ("category") and max probability ("score").
struct SoftLabelSet {
    int num_classes = 0;
    std::vector<std::int64_t> ids;
    std::vector<double> probs;  // n x num_classes, rows sum to 1
    std::vector<int> argmax;    // ties resolved to the lowest class index
    std::vector<double> max_score;

    int size() const { return static_cast<int>(ids.size()); }
    std::span<const double> row(int i) const {
        return {probs.data() + static_cast<std::size_t>(i) * num_classes,
                static_cast<std::size_t>(num_classes)};
    }
};

struct CurationReport {
    int gallery_in = 0;
    int removed_duplicates = 0;
    int after_dedup = 0;
    int selected = 0;
    std::vector<std::int64_t> removed_ids;
    std::vector<int> per_class_selected;
    std::vector<double> min_selected_score;  // -1 for classes with no selection
};

// Drops every gallery row whose max cosine similarity against any V row
// reaches the threshold; zero-norm vectors count as similarity 0.
std::pair<UnlabeledGallery, std::vector<std::int64_t>> dedup_against_validation(
    const UnlabeledGallery& gallery, const LabeledDataset& val, const CurationConfig& cfg);

SoftLabelSet score_gallery(const ModelParams& teacher, const UnlabeledGallery& gallery);

// Within each predicted class, keep the k highest-scoring samples (ties by
// ascending id); returns the union as ascending ids.
std::vector<std::int64_t> select_top_k_per_class(const SoftLabelSet& soft, int k);

std::pair<UnlabeledGallery, CurationReport> curate(const UnlabeledGallery& gallery,
                                                   const LabeledDataset& val,
                                                   const ModelParams& teacher,
                                                   const CurationConfig& cfg);

void write_curation_report(const std::string& path, const CurationReport& report);

}  // namespace softdistill
