#include "aniso/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "aniso/rng.hpp"

namespace aniso {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(lr_max > lr_min) || lr_min < 0) throw std::invalid_argument("need lr_max > lr_min >= 0");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("need 0 <= momentum < 1");
    if (weight_decay < 0) throw std::invalid_argument("weight_decay must be >= 0");
}

double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
    if (step < 0 || step >= total_steps) throw std::out_of_range("lr_at: step out of range");
    const double half = static_cast<double>(total_steps) / 2.0;
    const double s = static_cast<double>(step);
    if (s <= half) return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * s / half;
    return cfg.lr_max - (cfg.lr_max - cfg.lr_min) * (s - half) / (static_cast<double>(total_steps) - half);
}

TrainReport train(const ModelSpec& spec, ParamVector& params, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.split != "train") throw DataError("train() requires the train split, got '" + data.split + "'");
    if (data.channels != spec.input_shape[0] || data.height != spec.input_shape[1] ||
        data.width != spec.input_shape[2])
        throw ShapeError("dataset shape (" + std::to_string(data.channels) + "," + std::to_string(data.height) +
                         "," + std::to_string(data.width) + ") != model input " +
                         shape_to_string({spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]}));

    const auto t0 = std::chrono::steady_clock::now();
    const int n = data.n();
    const int64_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * batches_per_epoch;
    const size_t p_count = params.data.size();

    ModelRunner<float> runner(spec, params);
    std::vector<double> velocity(p_count, 0.0);
    std::vector<double> batch_grad(p_count, 0.0);

    TrainReport report;
    report.steps = 0;

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    constexpr int kChunk = 16;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(cfg.shuffle_seed, "epoch", {static_cast<uint64_t>(epoch)}));
        shuffle_indices(order, shuffle_rng);
        double epoch_loss = 0;
        for (int64_t b = 0; b < batches_per_epoch; ++b) {
            const int s0 = static_cast<int>(b) * cfg.batch_size;
            const int s1 = std::min(n, s0 + cfg.batch_size);
            const int bn = s1 - s0;
            const int nchunks = (bn + kChunk - 1) / kChunk;
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            double batch_loss = 0;
            bool nonfinite = false;

#pragma omp parallel for ordered schedule(static, 1)
            for (int c = 0; c < nchunks; ++c) {
                std::vector<double> partial(p_count, 0.0);
                double loss_partial = 0;
                bool bad = false;
                for (int s = s0 + c * kChunk; s < std::min(s1, s0 + (c + 1) * kChunk); ++s) {
                    const int idx = order[static_cast<size_t>(s)];
                    auto gb = runner.loss_and_grads(data.image(idx), data.labels[static_cast<size_t>(idx)]);
                    if (!std::isfinite(static_cast<double>(gb.loss))) {
                        bad = true;
                        break;
                    }
                    loss_partial += gb.loss;
                    for (size_t k = 0; k < p_count; ++k) partial[k] += gb.param_grads[k];
                }
#pragma omp ordered
                {
                    if (bad) nonfinite = true;
                    batch_loss += loss_partial;
                    for (size_t k = 0; k < p_count; ++k) batch_grad[k] += partial[k];
                }
            }
            if (nonfinite) {
                report.diverged = true;
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(b));
            }

            const double lr = lr_at(report.steps, total_steps, cfg);
            const double inv_bn = 1.0 / static_cast<double>(bn);
            for (size_t k = 0; k < p_count; ++k) {
                const double g = batch_grad[k] * inv_bn + cfg.weight_decay * static_cast<double>(params.data[k]);
                velocity[k] = cfg.momentum * velocity[k] - lr * g;
                params.data[k] = static_cast<float>(static_cast<double>(params.data[k]) + velocity[k]);
            }
            runner.refresh(params);
            epoch_loss += batch_loss;
            ++report.steps;
        }
        report.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(n));
    }

    report.final_train_accuracy = evaluate_accuracy(spec, params, data, nullptr, true);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream meta;
    meta << "epochs=" << cfg.epochs << " batch_size=" << cfg.batch_size << " lr_max=" << cfg.lr_max
         << " lr_min=" << cfg.lr_min << " momentum=" << cfg.momentum << " weight_decay=" << cfg.weight_decay
         << " shuffle_seed=" << cfg.shuffle_seed;
    if (!cfg.preset_name.empty()) meta << " preset=" << cfg.preset_name;
    report.metadata = meta.str();
    return report;
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data,
                         const std::vector<int>* keep, bool allow_train_split) {
    if (data.split != "test" && !allow_train_split)
        throw DataError("evaluate_accuracy expects the test split (pass allow_train_split to override)");
    const int n = data.n();
    if (n == 0) throw DataError("evaluate_accuracy: empty dataset");
    for (int8_t y : data.labels)
        if (y == 0) throw DataError("evaluate_accuracy: labels not binarized");
    ModelRunner<float> runner(spec, params);
    int64_t correct = 0;
#pragma omp parallel for reduction(+ : correct) schedule(static)
    for (int i = 0; i < n; ++i) {
        const int8_t y = data.labels[static_cast<size_t>(i)];
        TensorF x = data.image(i);
        if (keep) x = ablate_channels(x, *keep);
        const float logit = runner.predict(x);
        const int pred = logit >= 0.0f ? 1 : -1;
        if (pred == y) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

TrainConfig preset(const std::string& name) {
    TrainConfig c;
    c.preset_name = name;
    if (name == "s3-resnet") {
        c.epochs = 30;
        c.lr_max = 0.1;
        c.weight_decay = 1e-5;
    } else if (name == "s3-mlp-lenet") {
        c.epochs = 50;
        c.lr_max = 0.2;
        c.weight_decay = 0.0;
    } else if (name == "s4-mlp") {
        c.epochs = 60;
        c.lr_max = 0.15;
        c.weight_decay = 1e-5;
    } else if (name == "s4-lenet") {
        c.epochs = 40;
        c.lr_max = 0.15;
        c.weight_decay = 1e-5;
    } else if (name == "s4-miniresnet") {
        c.epochs = 40;
        c.lr_max = 0.15;
        c.weight_decay = 1e-5;
    } else {
        throw std::invalid_argument("unknown training preset '" + name + "'");
    }
    return c;
}

void write_train_report_csv(const std::string& path, const TrainReport& report, const TrainConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << "epoch,mean_loss,lr_at_epoch_end\n";
    const int64_t batches_per_epoch = report.steps / static_cast<int64_t>(report.epoch_mean_loss.size());
    const int64_t total = report.steps;
    for (size_t e = 0; e < report.epoch_mean_loss.size(); ++e) {
        const int64_t step = std::min<int64_t>(total - 1, static_cast<int64_t>(e + 1) * batches_per_epoch - 1);
        os << (e + 1) << "," << report.epoch_mean_loss[e] << "," << lr_at(step, total, cfg) << "\n";
    }
    os << "# " << report.metadata << "\n";
}

}  // namespace aniso
