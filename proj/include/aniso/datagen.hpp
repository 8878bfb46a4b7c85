#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aniso/tensor.hpp"

namespace aniso {

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Materialized labeled image set for one split. Labels are +1/-1; 0 marks
// "not yet binarized" (raw CIFAR-10 before binarize_labels).
struct Dataset {
    std::string split;  // "train" or "test"
    int channels = 0, height = 0, width = 0;
    std::vector<float> images;   // n * C * H * W, row-major
    std::vector<int8_t> labels;  // one per sample
    std::vector<uint8_t> class10;  // 10-class provenance labels, empty for synthetic data
    std::string provenance;

    int n() const { return static_cast<int>(labels.size()); }
    int64_t sample_size() const { return static_cast<int64_t>(channels) * height * width; }
    const float* image_ptr(int i) const { return images.data() + static_cast<int64_t>(i) * sample_size(); }
    TensorF image(int i) const;
};

struct DatasetPair {
    Dataset train, test;
};

// Parameters of the single-discriminative-direction distribution: samples are
// x = epsilon*y*v + w with w Gaussian in the orthogonal complement of v.
struct LinSepSpec {
    std::vector<double> v;  // unit vector of length height*width
    double epsilon = 1.0;
    double sigma = 1.0;
    int n_train = 4000, n_test = 4000;
    int height = 16, width = 16;
    uint64_t seed = 0;
};

DatasetPair sample_linsep(const LinSepSpec& spec);

// Stacks same-label samples of a and b along the channel axis. Output order
// follows a; b's within-class partners are drawn under a seeded shuffle.
Dataset concat_channels(const Dataset& a, const Dataset& b, uint64_t pair_seed);

// Official binary batch files (data_batch_1..5.bin + test_batch.bin), each
// 10,000 records of 1 label byte + 3072 pixel bytes. Pixels mapped to [0,1].
DatasetPair load_cifar10(const std::string& dir);

// y = -1 for classes 0..4, +1 for 5..9
void binarize_labels(Dataset& d);

// Seeded class-balanced subset of n samples (labels must be +1/-1 already).
Dataset balanced_subset(const Dataset& d, int n, uint64_t seed);

struct NormStats {
    std::vector<double> mean, stddev;  // per channel
};

NormStats train_norm_stats(const Dataset& train);
void standardize(Dataset& d, const NormStats& stats);

// Zeroes every channel not in `keep`; empty keep zeroes everything.
TensorF ablate_channels(const TensorF& x, const std::vector<int>& keep);

// ANISODAT little-endian binary + human-readable provenance sidecar
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

}  // namespace aniso
