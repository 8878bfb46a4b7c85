#pragma once

// Shared test utilities: finite-difference gradient checking against the
// autodiff engine, small random-tensor builders, and temp-file scaffolding.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aniso/models.hpp"
#include "aniso/rng.hpp"
#include "aniso/tensor.hpp"

namespace testutil {

inline double rel_err(double got, double want) {
    const double denom = std::max({1.0, std::abs(got), std::abs(want)});
    return std::abs(got - want) / denom;
}

inline aniso::TensorD random_tensor(const std::vector<int>& shape, aniso::Rng& rng, double scale = 1.0) {
    auto t = aniso::TensorD::zeros(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

// Coordinate-wise central finite differences of a scalar function of several
// tensors, compared against the provided analytic gradients. Returns the
// worst relative error across all coordinates.
inline double fd_check(const std::function<double(const std::vector<aniso::TensorD>&)>& f,
                       std::vector<aniso::TensorD> leaves,
                       const std::vector<aniso::TensorD>& analytic, double h = 1e-5) {
    double worst = 0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        for (int64_t i = 0; i < leaves[li].size(); ++i) {
            const double orig = leaves[li][i];
            leaves[li][i] = orig + h;
            const double fp = f(leaves);
            leaves[li][i] = orig - h;
            const double fm = f(leaves);
            leaves[li][i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[li].size() ? analytic[li][i] : 0.0;
            worst = std::max(worst, rel_err(an, fd));
        }
    }
    return worst;
}

// Records a model forward pass on a fresh double tape with parameters
// perturbed by t * dir (dir spans params then input, flat) and returns the
// loss (or raw logit when label == 0).
inline double model_eval_perturbed(const aniso::ModelSpec& spec, const std::vector<double>& params,
                                   const aniso::TensorD& x, const std::vector<double>& dir, double t,
                                   int label) {
    using namespace aniso;
    const ParamLayout layout = layout_for(spec);
    Tape<double> tape;
    std::vector<int> pn;
    for (const auto& e : layout.entries) {
        TensorD pt = TensorD::zeros(e.shape);
        for (int64_t j = 0; j < pt.size(); ++j) {
            const size_t k = static_cast<size_t>(e.offset + j);
            pt[j] = params[k] + t * dir[k];
        }
        pn.push_back(tape.leaf(std::move(pt)));
    }
    TensorD xx = x;
    for (int64_t i = 0; i < xx.size(); ++i)
        xx[i] = x[i] + t * dir[params.size() + static_cast<size_t>(i)];
    int logit = build_forward(tape, spec, pn, tape.leaf(std::move(xx)));
    int out = label == 0 ? logit : tape.logistic_loss(logit, static_cast<double>(label));
    return tape.value(out)[0];
}

// Directional central-difference check of the joint (params, input) gradient
// of a model's logistic loss, entirely in double precision. Returns the
// relative error between the analytic directional derivative and the FD one.
inline double directional_fd_check(const aniso::ModelSpec& spec, aniso::Rng& rng, int label,
                                   double h = 1e-5) {
    using namespace aniso;
    ParamVector p = build(spec, InitScheme{.seed = rng.next_u64()});
    const auto [c, hh, ww] = spec.input_shape;
    TensorD x = random_tensor({c, hh, ww}, rng);

    auto gb = loss_and_grads<double>(spec, p, x, label, true);

    std::vector<double> dir(p.data.size() + static_cast<size_t>(x.size()));
    double norm = 0;
    for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : dir) v /= norm;

    double analytic = 0;
    for (size_t i = 0; i < p.data.size(); ++i) analytic += gb.param_grads[i] * dir[i];
    for (int64_t i = 0; i < x.size(); ++i)
        analytic += gb.input_grad[i] * dir[p.data.size() + static_cast<size_t>(i)];

    std::vector<double> pd(p.data.begin(), p.data.end());
    const double fp = model_eval_perturbed(spec, pd, x, dir, +h, label);
    const double fm = model_eval_perturbed(spec, pd, x, dir, -h, label);
    return rel_err(analytic, (fp - fm) / (2.0 * h));
}

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<uint64_t> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("aniso-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
