#pragma once

#include <array>
#include <string>
#include <vector>

#include "aniso/kernels.hpp"
#include "aniso/tensor.hpp"

namespace aniso {

enum class OpKind {
    leaf,
    affine,
    conv2d,
    relu,
    maxpool2,
    avgpool2,
    global_avgpool,
    concat_c,
    flatten,
    add,
    logistic_loss,
};

const char* op_name(OpKind k);

// Reverse-mode tape. Nodes are appended in execution order, so the recorded
// graph is topologically sorted by construction. One backward() pass per tape
// from a designated scalar output.
template <typename T>
class Tape {
public:
    struct Node {
        OpKind op;
        std::array<int, 3> in{-1, -1, -1};
        Tensor<T> value;
        const Tensor<T>* ext = nullptr;  // non-owning leaf storage, overrides value
        // op-specific payload
        int stride = 1, pad = 0;
        T label = T(0);
        std::vector<int32_t> argmax;  // maxpool2 winner offsets
    };

    explicit Tape(bool check_finite = false) : check_finite_(check_finite) {}

    int leaf(Tensor<T> v) {
        check_inputs(OpKind::leaf, v);
        return push({OpKind::leaf, {-1, -1, -1}, std::move(v)});
    }

    // Leaf backed by caller-owned storage; must outlive the tape.
    int leaf_ref(const Tensor<T>* v) {
        check_inputs(OpKind::leaf, *v);
        Node n{OpKind::leaf, {-1, -1, -1}, {}};
        n.ext = v;
        return push(std::move(n));
    }

    // y = W x + b with x flattened; W is (out, in), b is (out).
    int affine(int x, int w, int b);
    // x (C,H,W), w (O,C,k,k), b (O)
    int conv2d(int x, int w, int b, int stride, int pad);
    int relu(int x);
    int maxpool2(int x);
    int avgpool2(int x);
    int global_avgpool(int x);
    int concat_c(int a, int b);
    int flatten(int x);
    int add(int a, int b);
    // loss = log(1 + exp(-y * logit)), label y in {-1, +1}
    int logistic_loss(int logit, T label);

    const Tensor<T>& value(int id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        return n.ext ? *n.ext : n.value;
    }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }

    // Gradients of the scalar node `out` with respect to every node. Entries
    // for nodes that feed the output are populated; the caller reads leaves.
    std::vector<Tensor<T>> backward(int out) const;

private:
    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }
    const Tensor<T>& in_value(int id) const { return value(id); }
    void check_inputs(OpKind k, const Tensor<T>& v) const {
        if (check_finite_ && !v.all_finite())
            throw NumericError(std::string("non-finite values entering op '") + op_name(k) + "'");
    }

    std::vector<Node> nodes_;
    bool check_finite_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace aniso
