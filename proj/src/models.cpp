#include "aniso/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "aniso/rng.hpp"

namespace aniso {

std::string family_name(Family f) {
    switch (f) {
        case Family::linear: return "linear";
        case Family::mlp: return "mlp";
        case Family::lenet: return "lenet";
        case Family::miniresnet: return "miniresnet";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "linear") return Family::linear;
    if (name == "mlp") return Family::mlp;
    if (name == "lenet") return Family::lenet;
    if (name == "miniresnet") return Family::miniresnet;
    throw std::invalid_argument("unknown model family '" + name + "'");
}

ModelSpec ModelSpec::make_linear(std::array<int, 3> in) {
    ModelSpec s;
    s.family = Family::linear;
    s.input_shape = in;
    return s;
}

ModelSpec ModelSpec::make_mlp(std::array<int, 3> in, std::vector<int> hidden) {
    ModelSpec s;
    s.family = Family::mlp;
    s.input_shape = in;
    s.mlp_hidden = std::move(hidden);
    return s;
}

ModelSpec ModelSpec::make_lenet(std::array<int, 3> in) {
    ModelSpec s;
    s.family = Family::lenet;
    s.input_shape = in;
    return s;
}

ModelSpec ModelSpec::make_miniresnet(std::array<int, 3> in) {
    ModelSpec s;
    s.family = Family::miniresnet;
    s.input_shape = in;
    return s;
}

std::string ModelSpec::describe() const {
    std::string s = family_name(family) + ":" + std::to_string(input_shape[0]) + "x" +
                    std::to_string(input_shape[1]) + "x" + std::to_string(input_shape[2]);
    if (family == Family::mlp) {
        s += ":h=";
        for (size_t i = 0; i < mlp_hidden.size(); ++i) s += (i ? "," : "") + std::to_string(mlp_hidden[i]);
    } else if (family == Family::lenet) {
        s += ":c=" + std::to_string(lenet.c1) + "," + std::to_string(lenet.c2) + ":k=" +
             std::to_string(lenet.kernel) + ":d=" + std::to_string(lenet.d1) + "," + std::to_string(lenet.d2);
    } else if (family == Family::miniresnet) {
        s += ":stem=" + std::to_string(mini.stem) + ":w=";
        for (size_t i = 0; i < mini.stage_widths.size(); ++i)
            s += (i ? "," : "") + std::to_string(mini.stage_widths[i]);
        s += ":b=" + std::to_string(mini.blocks_per_stage);
    }
    return s;
}

uint64_t ModelSpec::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : describe()) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

struct LayoutBuilder {
    ParamLayout layout;
    void add(std::string name, std::vector<int> shape, InitRole role, int fan_in) {
        ParamEntry e{std::move(name), std::move(shape), layout.total, role, fan_in};
        layout.total += shape_product(e.shape);
        layout.entries.push_back(std::move(e));
    }
    void dense(const std::string& name, int out, int in, InitRole role) {
        add(name + ".w", {out, in}, role, in);
        add(name + ".b", {out}, InitRole::bias, 0);
    }
    void conv(const std::string& name, int out_c, int in_c, int k) {
        add(name + ".w", {out_c, in_c, k, k}, InitRole::hidden_weight, in_c * k * k);
        add(name + ".b", {out_c}, InitRole::bias, 0);
    }
};

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace

ParamLayout layout_for(const ModelSpec& spec) {
    const auto [c, h, w] = spec.input_shape;
    require(c > 0 && h > 0 && w > 0, "model input shape must be positive, got " +
                                         shape_to_string({c, h, w}));
    const int d = static_cast<int>(spec.input_size());
    LayoutBuilder b;
    switch (spec.family) {
        case Family::linear:
            b.dense("head", 1, d, InitRole::final_weight);
            break;
        case Family::mlp: {
            require(!spec.mlp_hidden.empty(), "mlp needs at least one hidden layer");
            int in = d;
            for (size_t i = 0; i < spec.mlp_hidden.size(); ++i) {
                require(spec.mlp_hidden[i] > 0, "mlp hidden width must be positive");
                b.dense("fc" + std::to_string(i + 1), spec.mlp_hidden[i], in, InitRole::hidden_weight);
                in = spec.mlp_hidden[i];
            }
            b.dense("head", 1, in, InitRole::final_weight);
            break;
        }
        case Family::lenet: {
            const auto& L = spec.lenet;
            require(L.c1 > 0 && L.c2 > 0 && L.d1 > 0 && L.d2 > 0, "lenet widths must be positive");
            int hh = conv_out(h, L.kernel, 1, 0), ww = conv_out(w, L.kernel, 1, 0);
            require(hh >= 2 && ww >= 2 && hh % 2 == 0 && ww % 2 == 0,
                    "lenet: input " + shape_to_string({c, h, w}) + " incompatible with conv1+pool");
            b.conv("conv1", L.c1, c, L.kernel);
            hh /= 2;
            ww /= 2;
            hh = conv_out(hh, L.kernel, 1, 0);
            ww = conv_out(ww, L.kernel, 1, 0);
            require(hh >= 2 && ww >= 2 && hh % 2 == 0 && ww % 2 == 0,
                    "lenet: input " + shape_to_string({c, h, w}) + " incompatible with conv2+pool");
            b.conv("conv2", L.c2, L.c1, L.kernel);
            hh /= 2;
            ww /= 2;
            b.dense("fc1", L.d1, L.c2 * hh * ww, InitRole::hidden_weight);
            b.dense("fc2", L.d2, L.d1, InitRole::hidden_weight);
            b.dense("head", 1, L.d2, InitRole::final_weight);
            break;
        }
        case Family::miniresnet: {
            const auto& M = spec.mini;
            require(!M.stage_widths.empty() && M.blocks_per_stage > 0, "miniresnet needs stages and blocks");
            int hh = h, ww = w;
            b.conv("stem", M.stem, c, 3);
            int in_c = M.stem;
            for (size_t s = 0; s < M.stage_widths.size(); ++s) {
                const int width = M.stage_widths[s];
                require(width > 0, "miniresnet stage width must be positive");
                for (int blk = 0; blk < M.blocks_per_stage; ++blk) {
                    const int stride = (s > 0 && blk == 0) ? 2 : 1;
                    const std::string p = "stage" + std::to_string(s + 1) + ".block" + std::to_string(blk + 1);
                    if (stride == 2) {
                        require(hh >= 2 && ww >= 2, "miniresnet: spatial dims exhausted at " + p);
                        hh = conv_out(hh, 3, 2, 1);
                        ww = conv_out(ww, 3, 2, 1);
                    }
                    b.conv(p + ".conv1", width, in_c, 3);
                    b.conv(p + ".conv2", width, width, 3);
                    if (stride == 2 || in_c != width) b.conv(p + ".skip", width, in_c, 1);
                    in_c = width;
                }
            }
            require(hh >= 1 && ww >= 1, "miniresnet: input too small for the stage pipeline");
            b.dense("head", 1, in_c, InitRole::final_weight);
            break;
        }
    }
    return b.layout;
}

ParamVector build(const ModelSpec& spec, const InitScheme& init) {
    const ParamLayout layout = layout_for(spec);
    ParamVector p;
    p.data.assign(static_cast<size_t>(layout.total), 0.0f);
    for (size_t i = 0; i < layout.entries.size(); ++i) {
        const ParamEntry& e = layout.entries[i];
        if (e.role == InitRole::bias) continue;
        const double gain = e.role == InitRole::final_weight ? init.gain_final : init.gain_hidden;
        const double stddev = gain / std::sqrt(static_cast<double>(e.fan_in));
        Rng rng(Rng::derive(init.seed, "param", {static_cast<uint64_t>(i)}));
        const int64_t n = shape_product(e.shape);
        for (int64_t j = 0; j < n; ++j)
            p.data[static_cast<size_t>(e.offset + j)] = static_cast<float>(stddev * rng.normal());
    }
    return p;
}

namespace {

// Shared forward recorder; assumes param_nodes follow layout order.
template <typename T>
struct Recorder {
    Tape<T>& tape;
    const std::vector<int>& pn;
    size_t next = 0;
    int take() { return pn.at(next++); }
    int dense(int x) {
        int w = take(), b = take();
        return tape.affine(x, w, b);
    }
    int conv(int x, int stride, int pad) {
        int w = take(), b = take();
        return tape.conv2d(x, w, b, stride, pad);
    }
};

}  // namespace

template <typename T>
int build_forward(Tape<T>& tape, const ModelSpec& spec, const std::vector<int>& param_nodes, int x_node) {
    Recorder<T> r{tape, param_nodes};
    switch (spec.family) {
        case Family::linear:
            return r.dense(tape.flatten(x_node));
        case Family::mlp: {
            int x = tape.flatten(x_node);
            for (size_t i = 0; i < spec.mlp_hidden.size(); ++i) x = tape.relu(r.dense(x));
            return r.dense(x);
        }
        case Family::lenet: {
            int x = tape.maxpool2(tape.relu(r.conv(x_node, 1, 0)));
            x = tape.maxpool2(tape.relu(r.conv(x, 1, 0)));
            x = tape.flatten(x);
            x = tape.relu(r.dense(x));
            x = tape.relu(r.dense(x));
            return r.dense(x);
        }
        case Family::miniresnet: {
            const auto& M = spec.mini;
            int x = tape.relu(r.conv(x_node, 1, 1));
            int in_c = M.stem;
            for (size_t s = 0; s < M.stage_widths.size(); ++s) {
                const int width = M.stage_widths[s];
                for (int blk = 0; blk < M.blocks_per_stage; ++blk) {
                    const int stride = (s > 0 && blk == 0) ? 2 : 1;
                    int y = tape.relu(r.conv(x, stride, 1));
                    y = r.conv(y, 1, 1);
                    int skip = x;
                    if (stride == 2 || in_c != width) skip = r.conv(x, stride, 0);
                    x = tape.relu(tape.add(y, skip));
                    in_c = width;
                }
            }
            return r.dense(tape.global_avgpool(x));
        }
    }
    throw std::logic_error("unreachable model family");
}

namespace {

template <typename T>
void check_input_shape(const ModelSpec& spec, const Tensor<T>& x) {
    if (x.rank() != 3 || x.dim(0) != spec.input_shape[0] || x.dim(1) != spec.input_shape[1] ||
        x.dim(2) != spec.input_shape[2])
        throw ShapeError("model input shape " + shape_to_string(x.shape) + " != spec input " +
                         shape_to_string({spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]}));
}

}  // namespace

template <typename T>
T predict(const ModelSpec& spec, const ParamVector& params, const Tensor<T>& x) {
    return ModelRunner<T>(spec, params).predict(x);
}

template <typename T>
GradientBundle<T> loss_and_grads(const ModelSpec& spec, const ParamVector& params, const Tensor<T>& x,
                                 int label, bool want_input_grad) {
    return ModelRunner<T>(spec, params).loss_and_grads(x, label, want_input_grad);
}

template <typename T>
ModelRunner<T>::ModelRunner(const ModelSpec& spec, const ParamVector& params)
    : spec_(spec), layout_(layout_for(spec)) {
    param_tensors_.reserve(layout_.entries.size());
    for (const auto& e : layout_.entries) param_tensors_.push_back(Tensor<T>::zeros(e.shape));
    refresh(params);
}

template <typename T>
void ModelRunner<T>::refresh(const ParamVector& params) {
    if (static_cast<int64_t>(params.data.size()) != layout_.total)
        throw ShapeError("param vector length " + std::to_string(params.data.size()) + " != layout total " +
                         std::to_string(layout_.total));
    for (size_t i = 0; i < layout_.entries.size(); ++i) {
        const int64_t off = layout_.entries[i].offset;
        auto& t = param_tensors_[i];
        for (int64_t j = 0; j < t.size(); ++j) t[j] = static_cast<T>(params.data[off + j]);
    }
}

template <typename T>
T ModelRunner<T>::predict(const Tensor<T>& x) const {
    check_input_shape(spec_, x);
    Tape<T> tape;
    std::vector<int> pn;
    pn.reserve(param_tensors_.size());
    for (const auto& t : param_tensors_) pn.push_back(tape.leaf_ref(&t));
    int logit = build_forward(tape, spec_, pn, tape.leaf(x));
    return tape.value(logit)[0];
}

template <typename T>
GradientBundle<T> ModelRunner<T>::loss_and_grads(const Tensor<T>& x, int label, bool want_input_grad) const {
    check_input_shape(spec_, x);
    Tape<T> tape;
    std::vector<int> pn;
    pn.reserve(param_tensors_.size());
    for (const auto& t : param_tensors_) pn.push_back(tape.leaf_ref(&t));
    int x_node = tape.leaf(x);
    int logit = build_forward(tape, spec_, pn, x_node);
    int out = label == 0 ? logit : tape.logistic_loss(logit, static_cast<T>(label));
    auto grads = tape.backward(out);

    GradientBundle<T> gb;
    gb.logit = tape.value(logit)[0];
    gb.loss = tape.value(out)[0];
    if (want_input_grad) {
        auto& gx = grads[static_cast<size_t>(x_node)];
        gb.input_grad = gx.size() ? std::move(gx) : Tensor<T>::zeros(x.shape);
    }
    gb.param_grads.assign(static_cast<size_t>(layout_.total), T(0));
    for (size_t i = 0; i < pn.size(); ++i) {
        const auto& g = grads[static_cast<size_t>(pn[i])];
        if (g.size() == 0) continue;
        const int64_t off = layout_.entries[i].offset;
        for (int64_t j = 0; j < g.size(); ++j) gb.param_grads[static_cast<size_t>(off + j)] = g[j];
    }
    return gb;
}

template class ModelRunner<float>;
template class ModelRunner<double>;

namespace {
constexpr char kParamMagic[8] = {'A', 'N', 'I', 'S', 'O', 'P', 'R', 'M'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("unexpected end of file");
    return v;
}
}  // namespace

void save_params(const std::string& path, const ModelSpec& spec, const ParamVector& p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(kParamMagic, 8);
    write_pod<uint32_t>(os, 1);
    write_pod<uint64_t>(os, spec.hash());
    write_pod<uint64_t>(os, p.data.size());
    os.write(reinterpret_cast<const char*>(p.data.data()),
             static_cast<std::streamsize>(p.data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

ParamVector load_params(const std::string& path, const ModelSpec& expected_spec) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kParamMagic, 8) != 0)
        throw std::runtime_error("'" + path + "' is not a parameter file (bad magic)");
    const auto version = read_pod<uint32_t>(is);
    if (version != 1) throw std::runtime_error("unsupported parameter file version " + std::to_string(version));
    const auto hash = read_pod<uint64_t>(is);
    if (hash != expected_spec.hash())
        throw std::runtime_error("'" + path + "' was written for a different model spec");
    const auto count = read_pod<uint64_t>(is);
    const ParamLayout layout = layout_for(expected_spec);
    if (count != static_cast<uint64_t>(layout.total))
        throw std::runtime_error("'" + path + "' parameter count mismatch");
    ParamVector p;
    p.data.resize(count);
    is.read(reinterpret_cast<char*>(p.data.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!is) throw std::runtime_error("'" + path + "' truncated");
    return p;
}

template int build_forward<float>(Tape<float>&, const ModelSpec&, const std::vector<int>&, int);
template int build_forward<double>(Tape<double>&, const ModelSpec&, const std::vector<int>&, int);
template float predict<float>(const ModelSpec&, const ParamVector&, const Tensor<float>&);
template double predict<double>(const ModelSpec&, const ParamVector&, const Tensor<double>&);
template GradientBundle<float> loss_and_grads<float>(const ModelSpec&, const ParamVector&, const Tensor<float>&,
                                                     int, bool);
template GradientBundle<double> loss_and_grads<double>(const ModelSpec&, const ParamVector&,
                                                       const Tensor<double>&, int, bool);

}  // namespace aniso
