#include "softdistill/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "softdistill/errors.h"
#include "softdistill/rng.h"
#include "softdistill/serialize.h"

namespace softdistill {

namespace {

constexpr std::string_view kDatasetMagic = "SDLABDS1";
constexpr std::string_view kGalleryMagic = "SDLABGL1";
constexpr std::uint32_t kFormatVersion = 1;

void validate_synthetic_config(const SyntheticConfig& cfg) {
    if (cfg.num_classes < 2) throw std::invalid_argument("synthetic: num_classes must be >= 2");
    if (cfg.extra_modes < 0) throw std::invalid_argument("synthetic: extra_modes must be >= 0");
    if (cfg.dim < 2) throw std::invalid_argument("synthetic: dim must be >= 2");
    if (cfg.train_size < cfg.num_classes || cfg.val_size < cfg.num_classes ||
        cfg.gallery_size < cfg.num_classes)
        throw std::invalid_argument("synthetic: sizes must be >= num_classes");
    if (!(cfg.class_mean_scale > 0.0))
        throw std::invalid_argument("synthetic: class_mean_scale must be positive");
    if (!(cfg.within_stddev > 0.0))
        throw std::invalid_argument("synthetic: within_stddev must be positive");
    if (cfg.duplicate_fraction < 0.0 || cfg.duplicate_fraction >= 1.0)
        throw std::invalid_argument("synthetic: duplicate_fraction must lie in [0, 1)");
}

LabeledDataset sample_labeled(const MixtureOracle& oracle, int n, std::uint64_t seed,
                              const char* stream_label, const std::string& name) {
    Rng rng = Rng::stream(seed, stream_label);
    LabeledDataset data;
    data.name = name;
    data.dim = oracle.dim;
    data.num_classes = oracle.num_classes;
    data.features.resize(static_cast<std::size_t>(n) * oracle.dim);
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int label = i % oracle.num_classes;
        data.labels[i] = label;
        const double* mean = oracle.means.data() + static_cast<std::size_t>(label) * oracle.dim;
        double* row = data.features.data() + static_cast<std::size_t>(i) * oracle.dim;
        for (int d = 0; d < oracle.dim; ++d)
            row[d] = mean[d] + oracle.within_stddev * rng.next_gaussian();
    }
    return data;
}

void check_finite_payload(std::span<const double> vals, const std::string& path) {
    for (double v : vals)
        if (!std::isfinite(v)) throw FormatError(path + ": non-finite feature value");
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw TruncatedError(path + ": truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace

int MixtureOracle::bayes_predict(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim) throw ShapeError("oracle: sample dimension mismatch");
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_classes; ++c) {
        const double* mean = means.data() + static_cast<std::size_t>(c) * dim;
        double dist = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double diff = x[d] - mean[d];
            dist += diff * diff;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    return best;
}

double bayes_accuracy(const MixtureOracle& oracle, const LabeledDataset& data) {
    if (data.size() == 0) throw ShapeError("bayes_accuracy: empty dataset");
    int correct = 0;
    for (int i = 0; i < data.size(); ++i)
        if (oracle.bayes_predict(data.row(i)) == data.labels[i]) ++correct;
    return static_cast<double>(correct) / data.size();
}

SyntheticBundle generate_synthetic(const SyntheticConfig& cfg) {
    validate_synthetic_config(cfg);

    SyntheticBundle bundle;
    MixtureOracle& oracle = bundle.oracle;
    oracle.dim = cfg.dim;
    oracle.num_classes = cfg.num_classes;
    oracle.num_modes = cfg.num_classes + cfg.extra_modes;
    oracle.within_stddev = cfg.within_stddev;

    Rng means_rng = Rng::stream(cfg.seed, "means");
    oracle.means.resize(static_cast<std::size_t>(oracle.num_modes) * cfg.dim);
    for (double& v : oracle.means) v = cfg.class_mean_scale * means_rng.next_gaussian();

    bundle.train = sample_labeled(oracle, cfg.train_size, cfg.seed, "train", "train");
    bundle.val = sample_labeled(oracle, cfg.val_size, cfg.seed, "val", "val");

    UnlabeledGallery& gallery = bundle.gallery;
    gallery.name = "gallery";
    gallery.dim = cfg.dim;
    gallery.features.resize(static_cast<std::size_t>(cfg.gallery_size) * cfg.dim);
    gallery.ids.resize(cfg.gallery_size);
    Rng gallery_rng = Rng::stream(cfg.seed, "gallery");
    for (int i = 0; i < cfg.gallery_size; ++i) {
        const int mode = i % oracle.num_modes;
        const double* mean = oracle.means.data() + static_cast<std::size_t>(mode) * cfg.dim;
        double* row = gallery.features.data() + static_cast<std::size_t>(i) * cfg.dim;
        for (int d = 0; d < cfg.dim; ++d)
            row[d] = mean[d] + cfg.within_stddev * gallery_rng.next_gaussian();
        gallery.ids[i] = i;
    }

    // Plant exact copies of validation rows so dedup has known positives.
    const int n_dups =
        static_cast<int>(std::llround(cfg.duplicate_fraction * cfg.gallery_size));
    if (n_dups > 0) {
        Rng dup_rng = Rng::stream(cfg.seed, "dups");
        std::vector<int> targets = random_permutation(cfg.gallery_size, dup_rng);
        targets.resize(n_dups);
        std::sort(targets.begin(), targets.end());
        for (int t : targets) {
            const int src = static_cast<int>(dup_rng.next_below(cfg.val_size));
            std::copy_n(bundle.val.features.data() + static_cast<std::size_t>(src) * cfg.dim,
                        cfg.dim,
                        gallery.features.data() + static_cast<std::size_t>(t) * cfg.dim);
            bundle.planted_duplicate_ids.push_back(t);
        }
    }

    return bundle;
}

void save_dataset(const std::string& path, const LabeledDataset& data) {
    BinaryWriter w(path);
    w.magic(kDatasetMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.u32(static_cast<std::uint32_t>(data.dim));
    w.u32(static_cast<std::uint32_t>(data.num_classes));
    w.f64_array(data.features);
    std::vector<std::int32_t> labels(data.labels.begin(), data.labels.end());
    w.i32_array(labels);
    w.close();
}

LabeledDataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kDatasetMagic);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw VersionError(path + ": unsupported dataset version " + std::to_string(version));
    const std::uint32_t n = r.u32();
    const std::uint32_t dim = r.u32();
    const std::uint32_t k = r.u32();
    if (n == 0 || dim == 0 || k == 0) throw FormatError(path + ": empty dataset header");

    LabeledDataset data;
    data.name = stem_of(path);
    data.dim = static_cast<int>(dim);
    data.num_classes = static_cast<int>(k);
    data.features = r.f64_array(static_cast<std::size_t>(n) * dim);
    const auto labels = r.i32_array(n);
    r.expect_eof();

    check_finite_payload(data.features, path);
    data.labels.assign(labels.begin(), labels.end());
    for (int label : data.labels)
        if (label < 0 || label >= data.num_classes)
            throw FormatError(path + ": label out of range");
    return data;
}

void save_gallery(const std::string& path, const UnlabeledGallery& gallery) {
    BinaryWriter w(path);
    w.magic(kGalleryMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(gallery.size()));
    w.u32(static_cast<std::uint32_t>(gallery.dim));
    w.u32(0);  // class-count slot unused for unlabeled data
    w.f64_array(gallery.features);
    w.i64_array(gallery.ids);
    w.close();
}

UnlabeledGallery load_gallery(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kGalleryMagic);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw VersionError(path + ": unsupported gallery version " + std::to_string(version));
    const std::uint32_t n = r.u32();
    const std::uint32_t dim = r.u32();
    r.u32();  // unused class-count slot
    if (dim == 0) throw FormatError(path + ": zero-dimensional gallery");

    UnlabeledGallery gallery;
    gallery.name = stem_of(path);
    gallery.dim = static_cast<int>(dim);
    gallery.features = r.f64_array(static_cast<std::size_t>(n) * dim);
    gallery.ids = r.i64_array(n);
    r.expect_eof();

    check_finite_payload(gallery.features, path);
    std::unordered_set<std::int64_t> seen(gallery.ids.begin(), gallery.ids.end());
    if (seen.size() != gallery.ids.size()) throw FormatError(path + ": duplicate gallery ids");
    return gallery;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw IoError("cannot open for reading: " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("cannot open for reading: " + labels_path);

    if (read_be_u32(images, images_path) != 0x00000803u)
        throw FormatError(images_path + ": not an IDX image file");
    const std::uint32_t n_images = read_be_u32(images, images_path);
    const std::uint32_t rows = read_be_u32(images, images_path);
    const std::uint32_t cols = read_be_u32(images, images_path);

    if (read_be_u32(labels, labels_path) != 0x00000801u)
        throw FormatError(labels_path + ": not an IDX label file");
    const std::uint32_t n_labels = read_be_u32(labels, labels_path);
    if (n_images != n_labels)
        throw FormatError(images_path + ": image/label count mismatch (" +
                          std::to_string(n_images) + " vs " + std::to_string(n_labels) + ")");
    if (n_images == 0 || rows == 0 || cols == 0)
        throw FormatError(images_path + ": empty IDX payload");

    const std::size_t pixels = static_cast<std::size_t>(n_images) * rows * cols;
    std::vector<unsigned char> raw(pixels);
    images.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
    if (images.gcount() != static_cast<std::streamsize>(pixels))
        throw TruncatedError(images_path + ": truncated pixel payload");

    std::vector<unsigned char> raw_labels(n_labels);
    labels.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(n_labels));
    if (labels.gcount() != static_cast<std::streamsize>(n_labels))
        throw TruncatedError(labels_path + ": truncated label payload");

    LabeledDataset data;
    data.name = stem_of(images_path);
    data.dim = static_cast<int>(rows * cols);
    data.features.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) data.features[i] = raw[i] / 255.0;
    data.labels.assign(raw_labels.begin(), raw_labels.end());
    int max_label = 0;
    for (int label : data.labels) max_label = std::max(max_label, label);
    data.num_classes = max_label + 1;
    return data;
}

std::vector<std::vector<int>> batch_indices(int n, int batch_size, std::uint64_t seed,
                                            int epoch_index) {
    if (batch_size < 1) throw std::invalid_argument("batch_indices: batch_size must be >= 1");
    if (n < 0) throw std::invalid_argument("batch_indices: negative sample count");
    if (epoch_index < 0) throw std::invalid_argument("batch_indices: negative epoch index");

    Rng rng = Rng::stream(seed, "shuffle", static_cast<std::uint64_t>(epoch_index));
    std::vector<int> order = random_permutation(n, rng);

    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

}  // namespace softdistill
