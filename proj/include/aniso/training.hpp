#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aniso/datagen.hpp"
#include "aniso/models.hpp"

namespace aniso {

class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double lr_max = 0.1;
    double lr_min = 0.0;
    double momentum = 0.9;
    double weight_decay = 0.0;
    uint64_t shuffle_seed = 0;
    std::string preset_name;  // informational

    void validate() const;
};

// Triangular one-cycle schedule: lr_min -> lr_max over the first half of the
// run, back down over the second half.
double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg);

struct TrainReport {
    std::vector<double> epoch_mean_loss;
    double final_train_accuracy = 0;
    int64_t steps = 0;
    double wall_seconds = 0;
    bool diverged = false;
    std::string metadata;
};

// SGD with momentum and L2 weight decay; params updated in place. Throws
// DivergenceError when the loss goes non-finite.
TrainReport train(const ModelSpec& spec, ParamVector& params, const Dataset& data, const TrainConfig& cfg);

// Fraction of samples with sign(logit) == label; sign(0) counts as +1.
// keep == nullptr evaluates un-ablated inputs.
double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data,
                         const std::vector<int>* keep = nullptr, bool allow_train_split = false);

// Named recipes: s3-resnet, s3-mlp-lenet, s4-mlp, s4-lenet, s4-miniresnet
TrainConfig preset(const std::string& name);

void write_train_report_csv(const std::string& path, const TrainReport& report, const TrainConfig& cfg);

}  // namespace aniso
