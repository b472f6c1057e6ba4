#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace softdistill {

struct LabeledDataset {
    std::string name;
    int dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // n x dim, row-major
    std::vector<int> labels;       // each in [0, num_classes)

    int size() const { return static_cast<int>(labels.size()); }
    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
};

struct UnlabeledGallery {
    std::string name;
    int dim = 0;
    std::vector<double> features;   // n x dim, row-major
    std::vector<std::int64_t> ids;  // stable, unique

    int size() const { return static_cast<int>(ids.size()); }
    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// Gaussian mixture over K labeled classes plus E gallery-only modes.
struct SyntheticConfig {
    int num_classes = 10;   // K
    int extra_modes = 10;   // E: modes outside the label space, gallery only
    int dim = 32;           // D
    double class_mean_scale = 0.5;
    double within_stddev = 1.0;
    int train_size = 2000;
    int val_size = 2000;
    int gallery_size = 20000;
    double duplicate_fraction = 0.01;  // share of gallery rows planted as V copies
    std::uint64_t seed = 0;
};

// True mixture parameters; enough to evaluate class densities exactly.
struct MixtureOracle {
    int dim = 0;
    int num_classes = 0;
    int num_modes = 0;  // K + E
    double within_stddev = 1.0;
    std::vector<double> means;  // num_modes x dim

    // Argmax of the true class densities; with shared isotropic covariance and
    // balanced priors this is the nearest of the first num_classes means.
    int bayes_predict(std::span<const double> x) const;
};

double bayes_accuracy(const MixtureOracle& oracle, const LabeledDataset& data);

struct SyntheticBundle {
    LabeledDataset train;
    LabeledDataset val;
    UnlabeledGallery gallery;
    MixtureOracle oracle;
    std::vector<std::int64_t> planted_duplicate_ids;  // gallery ids copied from V rows
};

SyntheticBundle generate_synthetic(const SyntheticConfig& cfg);

// Binary container round trips (bit exact). Loaders name the result after the
// file stem.
void save_dataset(const std::string& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::string& path);
void save_gallery(const std::string& path, const UnlabeledGallery& gallery);
UnlabeledGallery load_gallery(const std::string& path);

// IDX (big-endian) image/label pair; pixels scaled to [0,1], images flattened.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Deterministic per-epoch shuffle of [0, n), chunked into batches; the last
// batch may be short. Order depends only on (seed, epoch_index).
std::vector<std::vector<int>> batch_indices(int n, int batch_size, std::uint64_t seed,
                                            int epoch_index);

}  // namespace softdistill
