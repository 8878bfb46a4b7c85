#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aniso/models.hpp"
#include "aniso/nad.hpp"
#include "aniso/training.hpp"

namespace aniso {

inline constexpr const char* kToolkitVersion = "anisotool 0.1.0";

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parsed from a sectioned key = value file; unknown keys are rejected.
// serialize() emits a canonical form whose re-parse yields the same digest.
struct ExperimentConfig {
    // [experiment]
    std::string kind;  // nads | synth | train-linear-linear | train-cifar-synth | cross-section
    std::string out = "runs/out";
    int seeds = 3;
    uint64_t master_seed = 0;
    bool paper_scale = false;

    // [model]
    std::string family = "mlp";
    std::vector<int> mlp_hidden{100, 20};

    // [nads]
    std::string basis_path;
    int n_inits = 512;
    int n_inputs_per_init = 4;
    std::string input_law = "gaussian";
    std::vector<int> idx1{1};
    std::vector<int> idx2{1};

    // [data]
    int height = 16, width = 16;
    double epsilon1 = 1.0, epsilon2 = 0.5, sigma = 1.0;
    int n_train = 4000, n_test = 4000;
    std::string cifar_dir = "data/cifar-10-batches-bin";
    int cifar_subset = 10000;
    std::string normalize = "standardize";

    // [train]
    std::string train_preset = "s3-mlp-lenet";
    std::optional<int> epochs, batch_size;
    std::optional<double> lr_max, lr_min, momentum, weight_decay;

    // [cross_section]
    int resolution = 201;
    double half_range = 0;  // 0 = 2.5 * max(epsilon)
    std::string params_path;

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);
    std::string serialize() const;
    uint64_t digest() const;
    void validate() const;

    // full-scale settings: 32x32 spatial dims, 10,000/10,000 sample counts
    void apply_paper_scale();

    ModelSpec model_spec(int channels) const;
    TrainConfig train_config(uint64_t shuffle_seed) const;
    double cross_section_half_range() const;
};

uint64_t file_digest(const std::string& path);

// Each runner writes its artifacts plus a manifest under cfg.out and returns
// the list of files written (manifest last).
std::vector<std::string> run_nads(const ExperimentConfig& cfg);
std::vector<std::string> run_synth(const ExperimentConfig& cfg);
std::vector<std::string> run_grid(const ExperimentConfig& cfg);
std::vector<std::string> run_cross_section(const ExperimentConfig& cfg);
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

// Human-readable summary of a completed run directory.
std::string run_report(const std::string& out_dir);

}  // namespace aniso
