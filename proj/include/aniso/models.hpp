#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aniso/autodiff.hpp"
#include "aniso/tensor.hpp"

namespace aniso {

enum class Family { linear, mlp, lenet, miniresnet };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct ModelSpec {
    Family family = Family::linear;
    std::array<int, 3> input_shape{1, 16, 16};  // C, H, W

    std::vector<int> mlp_hidden{100, 20};

    struct LenetParams {
        int c1 = 6, c2 = 16, kernel = 5, d1 = 120, d2 = 84;
    } lenet;

    struct MiniResnetParams {
        int stem = 16;
        std::vector<int> stage_widths{16, 32, 64};
        int blocks_per_stage = 1;
    } mini;

    static ModelSpec make_linear(std::array<int, 3> in);
    static ModelSpec make_mlp(std::array<int, 3> in, std::vector<int> hidden);
    static ModelSpec make_lenet(std::array<int, 3> in);
    static ModelSpec make_miniresnet(std::array<int, 3> in);

    int64_t input_size() const {
        return static_cast<int64_t>(input_shape[0]) * input_shape[1] * input_shape[2];
    }
    uint64_t hash() const;
    std::string describe() const;
};

enum class InitRole { bias, hidden_weight, final_weight };

struct ParamEntry {
    std::string name;
    std::vector<int> shape;
    int64_t offset;
    InitRole role;
    int fan_in;  // 0 for biases
};

struct ParamLayout {
    std::vector<ParamEntry> entries;
    int64_t total = 0;
};

// Throws ShapeError when the spec's input shape does not survive its own
// conv/pool pipeline.
ParamLayout layout_for(const ModelSpec& spec);

struct ParamVector {
    std::vector<float> data;
};

struct InitScheme {
    double gain_hidden = 1.4142135623730951;  // sqrt(2), relu layers
    double gain_final = 1.0;
    uint64_t seed = 0;
};

// Fan-in-scaled normal init; a pure function of (spec, scheme).
ParamVector build(const ModelSpec& spec, const InitScheme& init);

// Records the model's forward pass on a tape. param_nodes must hold one leaf
// per layout entry, in layout order. Returns the scalar logit node.
template <typename T>
int build_forward(Tape<T>& tape, const ModelSpec& spec, const std::vector<int>& param_nodes, int x_node);

// Convenience wrappers; each call builds a fresh tape.
template <typename T>
T predict(const ModelSpec& spec, const ParamVector& params, const Tensor<T>& x);

template <typename T>
struct GradientBundle {
    T loss;
    T logit;
    Tensor<T> input_grad;
    std::vector<T> param_grads;  // flat, layout order
};

// Gradients of the logistic loss at (x, label). When label == 0, gradients of
// the raw logit are returned instead (the NAD path).
template <typename T>
GradientBundle<T> loss_and_grads(const ModelSpec& spec, const ParamVector& params, const Tensor<T>& x,
                                 int label, bool want_input_grad = false);

// Caches layout and parameter tensors so repeated per-sample evaluations do
// not re-copy the parameter vector. refresh() re-reads params after an
// optimizer step.
template <typename T>
class ModelRunner {
public:
    ModelRunner(const ModelSpec& spec, const ParamVector& params);
    void refresh(const ParamVector& params);
    T predict(const Tensor<T>& x) const;
    GradientBundle<T> loss_and_grads(const Tensor<T>& x, int label, bool want_input_grad = false) const;
    const ParamLayout& layout() const { return layout_; }

private:
    ModelSpec spec_;
    ParamLayout layout_;
    std::vector<Tensor<T>> param_tensors_;
};

extern template class ModelRunner<float>;
extern template class ModelRunner<double>;

// ANISOPRM little-endian binary
void save_params(const std::string& path, const ModelSpec& spec, const ParamVector& p);
ParamVector load_params(const std::string& path, const ModelSpec& expected_spec);

extern template int build_forward<float>(Tape<float>&, const ModelSpec&, const std::vector<int>&, int);
extern template int build_forward<double>(Tape<double>&, const ModelSpec&, const std::vector<int>&, int);
extern template float predict<float>(const ModelSpec&, const ParamVector&, const Tensor<float>&);
extern template double predict<double>(const ModelSpec&, const ParamVector&, const Tensor<double>&);
extern template GradientBundle<float> loss_and_grads<float>(const ModelSpec&, const ParamVector&,
                                                            const Tensor<float>&, int, bool);
extern template GradientBundle<double> loss_and_grads<double>(const ModelSpec&, const ParamVector&,
                                                              const Tensor<double>&, int, bool);

}  // namespace aniso
