#include "aniso/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace aniso {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::leaf: return "leaf";
        case OpKind::affine: return "affine";
        case OpKind::conv2d: return "conv2d";
        case OpKind::relu: return "relu";
        case OpKind::maxpool2: return "maxpool2";
        case OpKind::avgpool2: return "avgpool2";
        case OpKind::global_avgpool: return "global_avgpool";
        case OpKind::concat_c: return "concat_c";
        case OpKind::flatten: return "flatten";
        case OpKind::add: return "add";
        case OpKind::logistic_loss: return "logistic_loss";
    }
    return "?";
}

namespace {
[[noreturn]] void shape_fail(OpKind k, const std::string& detail) {
    throw ShapeError(std::string("op '") + op_name(k) + "': " + detail);
}

void require_chw(OpKind k, const std::vector<int>& s) {
    if (s.size() != 3) shape_fail(k, "expected a (C,H,W) input, got " + shape_to_string(s));
}
}  // namespace

template <typename T>
int Tape<T>::affine(int x, int w, int b) {
    const auto& xv = in_value(x);
    const auto& wv = in_value(w);
    const auto& bv = in_value(b);
    if (wv.rank() != 2) shape_fail(OpKind::affine, "weight must be 2-d, got " + shape_to_string(wv.shape));
    const int out = wv.dim(0), in = wv.dim(1);
    if (xv.size() != in)
        shape_fail(OpKind::affine, "input size " + std::to_string(xv.size()) + " != weight columns " +
                                       std::to_string(in));
    if (bv.size() != out)
        shape_fail(OpKind::affine, "bias size " + std::to_string(bv.size()) + " != weight rows " +
                                       std::to_string(out));
    check_inputs(OpKind::affine, xv);
    Tensor<T> y = Tensor<T>::zeros({out});
    kernels::dense_forward(wv.data.data(), bv.data.data(), xv.data.data(), y.data.data(), out, in);
    return push({OpKind::affine, {x, w, b}, std::move(y)});
}

template <typename T>
int Tape<T>::conv2d(int x, int w, int b, int stride, int pad) {
    const auto& xv = in_value(x);
    const auto& wv = in_value(w);
    const auto& bv = in_value(b);
    require_chw(OpKind::conv2d, xv.shape);
    if (wv.rank() != 4 || wv.dim(2) != wv.dim(3))
        shape_fail(OpKind::conv2d, "kernel must be (O,C,k,k), got " + shape_to_string(wv.shape));
    if (wv.dim(1) != xv.dim(0))
        shape_fail(OpKind::conv2d, "kernel input channels " + std::to_string(wv.dim(1)) +
                                       " != input channels " + std::to_string(xv.dim(0)));
    if (bv.size() != wv.dim(0))
        shape_fail(OpKind::conv2d, "bias size " + std::to_string(bv.size()) + " != output channels " +
                                       std::to_string(wv.dim(0)));
    kernels::Conv2dDims d{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0), wv.dim(2), stride, pad};
    if (d.out_h() < 1 || d.out_w() < 1)
        shape_fail(OpKind::conv2d, "input " + shape_to_string(xv.shape) + " too small for kernel " +
                                       std::to_string(d.k) + " stride " + std::to_string(stride) + " pad " +
                                       std::to_string(pad));
    check_inputs(OpKind::conv2d, xv);
    Tensor<T> y = Tensor<T>::zeros({d.out_c, d.out_h(), d.out_w()});
    kernels::conv2d_forward(xv.data.data(), wv.data.data(), bv.data.data(), y.data.data(), d);
    Node n{OpKind::conv2d, {x, w, b}, std::move(y)};
    n.stride = stride;
    n.pad = pad;
    return push(std::move(n));
}

template <typename T>
int Tape<T>::relu(int x) {
    const auto& xv = in_value(x);
    check_inputs(OpKind::relu, xv);
    Tensor<T> y = xv;
    for (auto& v : y.data) v = std::max(v, T(0));
    return push({OpKind::relu, {x, -1, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::maxpool2(int x) {
    const auto& xv = in_value(x);
    require_chw(OpKind::maxpool2, xv.shape);
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (h % 2 || w % 2)
        shape_fail(OpKind::maxpool2, "spatial dims must be even, got " + shape_to_string(xv.shape));
    check_inputs(OpKind::maxpool2, xv);
    const int oh = h / 2, ow = w / 2;
    Node n{OpKind::maxpool2, {x, -1, -1}, Tensor<T>::zeros({c, oh, ow})};
    n.argmax.resize(static_cast<size_t>(c) * oh * ow);
    for (int ci = 0; ci < c; ++ci) {
        for (int r = 0; r < oh; ++r) {
            for (int cc = 0; cc < ow; ++cc) {
                int best = -1;
                T bestv = 0;
                for (int dr = 0; dr < 2; ++dr) {
                    for (int dc = 0; dc < 2; ++dc) {
                        int off = (ci * h + 2 * r + dr) * w + 2 * cc + dc;
                        if (best < 0 || xv[off] > bestv) {
                            best = off;
                            bestv = xv[off];
                        }
                    }
                }
                n.value[(ci * oh + r) * ow + cc] = bestv;
                n.argmax[static_cast<size_t>((ci * oh + r) * ow + cc)] = best;
            }
        }
    }
    return push(std::move(n));
}

template <typename T>
int Tape<T>::avgpool2(int x) {
    const auto& xv = in_value(x);
    require_chw(OpKind::avgpool2, xv.shape);
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (h % 2 || w % 2)
        shape_fail(OpKind::avgpool2, "spatial dims must be even, got " + shape_to_string(xv.shape));
    check_inputs(OpKind::avgpool2, xv);
    const int oh = h / 2, ow = w / 2;
    Tensor<T> y = Tensor<T>::zeros({c, oh, ow});
    for (int ci = 0; ci < c; ++ci)
        for (int r = 0; r < oh; ++r)
            for (int cc = 0; cc < ow; ++cc) {
                T s = 0;
                for (int dr = 0; dr < 2; ++dr)
                    for (int dc = 0; dc < 2; ++dc) s += xv[(ci * h + 2 * r + dr) * w + 2 * cc + dc];
                y[(ci * oh + r) * ow + cc] = s / T(4);
            }
    return push({OpKind::avgpool2, {x, -1, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::global_avgpool(int x) {
    const auto& xv = in_value(x);
    require_chw(OpKind::global_avgpool, xv.shape);
    check_inputs(OpKind::global_avgpool, xv);
    const int c = xv.dim(0);
    const int64_t hw = static_cast<int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor<T> y = Tensor<T>::zeros({c});
    for (int ci = 0; ci < c; ++ci) {
        T s = 0;
        for (int64_t i = 0; i < hw; ++i) s += xv[ci * hw + i];
        y[ci] = s / static_cast<T>(hw);
    }
    return push({OpKind::global_avgpool, {x, -1, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::concat_c(int a, int b) {
    const auto& av = in_value(a);
    const auto& bv = in_value(b);
    require_chw(OpKind::concat_c, av.shape);
    require_chw(OpKind::concat_c, bv.shape);
    if (av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2))
        shape_fail(OpKind::concat_c,
                   "spatial dims differ: " + shape_to_string(av.shape) + " vs " + shape_to_string(bv.shape));
    check_inputs(OpKind::concat_c, av);
    check_inputs(OpKind::concat_c, bv);
    Tensor<T> y = Tensor<T>::zeros({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
    std::copy(av.data.begin(), av.data.end(), y.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + av.data.size());
    return push({OpKind::concat_c, {a, b, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::flatten(int x) {
    const auto& xv = in_value(x);
    check_inputs(OpKind::flatten, xv);
    Tensor<T> y(std::vector<int>{static_cast<int>(xv.size())}, xv.data);
    return push({OpKind::flatten, {x, -1, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::add(int a, int b) {
    const auto& av = in_value(a);
    const auto& bv = in_value(b);
    if (av.shape != bv.shape)
        shape_fail(OpKind::add, "shape mismatch: " + shape_to_string(av.shape) + " vs " + shape_to_string(bv.shape));
    check_inputs(OpKind::add, av);
    check_inputs(OpKind::add, bv);
    Tensor<T> y = av;
    for (int64_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    return push({OpKind::add, {a, b, -1}, std::move(y)});
}

template <typename T>
int Tape<T>::logistic_loss(int logit, T label) {
    const auto& zv = in_value(logit);
    if (!zv.is_scalar())
        shape_fail(OpKind::logistic_loss, "logit must be scalar, got " + shape_to_string(zv.shape));
    if (label != T(1) && label != T(-1))
        throw std::invalid_argument("logistic_loss: label must be +1 or -1");
    check_inputs(OpKind::logistic_loss, zv);
    // log(1 + exp(t)) with t = -y*z, guarded against overflow
    const T t = -label * zv[0];
    T loss;
    if (t > T(0))
        loss = t + std::log1p(std::exp(-t));
    else
        loss = std::log1p(std::exp(t));
    Node n{OpKind::logistic_loss, {logit, -1, -1}, Tensor<T>::scalar(loss)};
    n.label = label;
    return push(std::move(n));
}

template <typename T>
std::vector<Tensor<T>> Tape<T>::backward(int out) const {
    const auto& on = nodes_.at(static_cast<size_t>(out));
    if (!on.value.is_scalar())
        throw ShapeError("backward: output node must be scalar, got " + shape_to_string(on.value.shape));

    std::vector<Tensor<T>> grad(nodes_.size());
    std::vector<char> needed(nodes_.size(), 0);
    needed[static_cast<size_t>(out)] = 1;
    for (int id = out; id >= 0; --id) {
        if (!needed[static_cast<size_t>(id)]) continue;
        for (int in : nodes_[static_cast<size_t>(id)].in)
            if (in >= 0) needed[static_cast<size_t>(in)] = 1;
    }
    auto acc = [&](int id, int64_t i, T v) { grad[static_cast<size_t>(id)][i] += v; };
    auto ensure = [&](int id) {
        auto& g = grad[static_cast<size_t>(id)];
        if (g.size() == 0) g = Tensor<T>::zeros(in_value(id).shape);
    };
    ensure(out);
    grad[static_cast<size_t>(out)][0] = T(1);

    for (int id = out; id >= 0; --id) {
        if (!needed[static_cast<size_t>(id)] || grad[static_cast<size_t>(id)].size() == 0) continue;
        const Node& n = nodes_[static_cast<size_t>(id)];
        const Tensor<T>& g = grad[static_cast<size_t>(id)];
        switch (n.op) {
            case OpKind::leaf:
                break;
            case OpKind::affine: {
                const auto& xv = in_value(n.in[0]);
                const auto& wv = in_value(n.in[1]);
                ensure(n.in[0]);
                ensure(n.in[1]);
                ensure(n.in[2]);
                kernels::dense_backward(wv.data.data(), xv.data.data(), g.data.data(),
                                        grad[static_cast<size_t>(n.in[0])].data.data(),
                                        grad[static_cast<size_t>(n.in[1])].data.data(),
                                        grad[static_cast<size_t>(n.in[2])].data.data(), wv.dim(0), wv.dim(1));
                break;
            }
            case OpKind::conv2d: {
                const auto& xv = in_value(n.in[0]);
                const auto& wv = in_value(n.in[1]);
                ensure(n.in[0]);
                ensure(n.in[1]);
                ensure(n.in[2]);
                kernels::Conv2dDims d{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0), wv.dim(2), n.stride, n.pad};
                kernels::conv2d_backward(xv.data.data(), wv.data.data(), g.data.data(),
                                         grad[static_cast<size_t>(n.in[0])].data.data(),
                                         grad[static_cast<size_t>(n.in[1])].data.data(),
                                         grad[static_cast<size_t>(n.in[2])].data.data(), d);
                break;
            }
            case OpKind::relu: {
                const auto& xv = in_value(n.in[0]);
                ensure(n.in[0]);
                auto& gx = grad[static_cast<size_t>(n.in[0])];
                for (int64_t i = 0; i < g.size(); ++i)
                    if (xv[i] > T(0)) gx[i] += g[i];
                break;
            }
            case OpKind::maxpool2: {
                ensure(n.in[0]);
                auto& gx = grad[static_cast<size_t>(n.in[0])];
                for (int64_t i = 0; i < g.size(); ++i) gx[n.argmax[static_cast<size_t>(i)]] += g[i];
                break;
            }
            case OpKind::avgpool2: {
                const auto& xv = in_value(n.in[0]);
                ensure(n.in[0]);
                auto& gx = grad[static_cast<size_t>(n.in[0])];
                const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
                const int oh = h / 2, ow = w / 2;
                for (int ci = 0; ci < c; ++ci)
                    for (int r = 0; r < oh; ++r)
                        for (int cc = 0; cc < ow; ++cc) {
                            const T gv = g[(ci * oh + r) * ow + cc] / T(4);
                            for (int dr = 0; dr < 2; ++dr)
                                for (int dc = 0; dc < 2; ++dc)
                                    gx[(ci * h + 2 * r + dr) * w + 2 * cc + dc] += gv;
                        }
                break;
            }
            case OpKind::global_avgpool: {
                const auto& xv = in_value(n.in[0]);
                ensure(n.in[0]);
                auto& gx = grad[static_cast<size_t>(n.in[0])];
                const int c = xv.dim(0);
                const int64_t hw = static_cast<int64_t>(xv.dim(1)) * xv.dim(2);
                for (int ci = 0; ci < c; ++ci) {
                    const T gv = g[ci] / static_cast<T>(hw);
                    for (int64_t i = 0; i < hw; ++i) gx[ci * hw + i] += gv;
                }
                break;
            }
            case OpKind::concat_c: {
                const auto& av = in_value(n.in[0]);
                ensure(n.in[0]);
                ensure(n.in[1]);
                auto& ga = grad[static_cast<size_t>(n.in[0])];
                auto& gb = grad[static_cast<size_t>(n.in[1])];
                for (int64_t i = 0; i < av.size(); ++i) ga[i] += g[i];
                for (int64_t i = 0; i < gb.size(); ++i) gb[i] += g[av.size() + i];
                break;
            }
            case OpKind::flatten: {
                ensure(n.in[0]);
                auto& gx = grad[static_cast<size_t>(n.in[0])];
                for (int64_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                break;
            }
            case OpKind::add: {
                ensure(n.in[0]);
                ensure(n.in[1]);
                auto& ga = grad[static_cast<size_t>(n.in[0])];
                auto& gb = grad[static_cast<size_t>(n.in[1])];
                for (int64_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case OpKind::logistic_loss: {
                const auto& zv = in_value(n.in[0]);
                ensure(n.in[0]);
                // d/dz log(1+exp(-y z)) = -y * sigmoid(-y z)
                const T t = n.label * zv[0];
                const T s = t > T(0) ? std::exp(-t) / (T(1) + std::exp(-t)) : T(1) / (T(1) + std::exp(t));
                acc(n.in[0], 0, g[0] * (-n.label) * s);
                break;
            }
        }
    }
    return grad;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace aniso
