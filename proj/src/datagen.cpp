#include "aniso/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aniso/rng.hpp"

namespace aniso {

TensorF Dataset::image(int i) const {
    if (i < 0 || i >= n()) throw DataError("sample index " + std::to_string(i) + " out of range");
    const float* p = image_ptr(i);
    return TensorF({channels, height, width}, std::vector<float>(p, p + sample_size()));
}

namespace {

void check_unit(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    if (std::abs(std::sqrt(s) - 1.0) > 1e-6)
        throw DataError("discriminative direction is not a unit vector (|v| = " + std::to_string(std::sqrt(s)) +
                        ")");
}

Dataset sample_linsep_split(const LinSepSpec& spec, int n, const std::string& split, uint64_t stream) {
    const int d = spec.height * spec.width;
    Dataset out;
    out.split = split;
    out.channels = 1;
    out.height = spec.height;
    out.width = spec.width;
    out.labels.resize(static_cast<size_t>(n));
    out.images.resize(static_cast<size_t>(n) * d);

    Rng rng(stream);
    // exact class balance (within one sample for odd n), then seeded shuffle
    for (int i = 0; i < n; ++i) out.labels[static_cast<size_t>(i)] = i < (n + 1) / 2 ? 1 : -1;
    shuffle_indices(out.labels, rng);

    std::vector<double> g(static_cast<size_t>(d));
    for (int i = 0; i < n; ++i) {
        const double y = out.labels[static_cast<size_t>(i)];
        double dot = 0;
        for (int j = 0; j < d; ++j) {
            g[static_cast<size_t>(j)] = spec.sigma * rng.normal();
            dot += spec.v[static_cast<size_t>(j)] * g[static_cast<size_t>(j)];
        }
        float* x = out.images.data() + static_cast<int64_t>(i) * d;
        for (int j = 0; j < d; ++j)
            x[j] = static_cast<float>(spec.epsilon * y * spec.v[static_cast<size_t>(j)] +
                                      g[static_cast<size_t>(j)] - dot * spec.v[static_cast<size_t>(j)]);
    }
    std::ostringstream prov;
    prov << "linsep split=" << split << " d=" << d << " epsilon=" << spec.epsilon << " sigma=" << spec.sigma
         << " n=" << n << " seed=" << spec.seed;
    out.provenance = prov.str();
    return out;
}

}  // namespace

DatasetPair sample_linsep(const LinSepSpec& spec) {
    if (static_cast<int>(spec.v.size()) != spec.height * spec.width)
        throw DataError("direction length " + std::to_string(spec.v.size()) + " != " +
                        std::to_string(spec.height * spec.width));
    check_unit(spec.v);
    if (spec.epsilon <= 0) throw DataError("epsilon must be positive");
    if (spec.sigma < 0) throw DataError("sigma must be nonnegative");
    DatasetPair p;
    p.train = sample_linsep_split(spec, spec.n_train, "train", Rng::derive(spec.seed, "linsep-train"));
    p.test = sample_linsep_split(spec, spec.n_test, "test", Rng::derive(spec.seed, "linsep-test"));
    return p;
}

Dataset concat_channels(const Dataset& a, const Dataset& b, uint64_t pair_seed) {
    if (a.height != b.height || a.width != b.width)
        throw DataError("concat_channels: spatial dims differ (" + std::to_string(a.height) + "x" +
                        std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                        std::to_string(b.width) + ")");
    // partner lists per label in b, under a seeded within-class shuffle
    std::vector<int> b_pos, b_neg;
    for (int i = 0; i < b.n(); ++i) (b.labels[static_cast<size_t>(i)] > 0 ? b_pos : b_neg).push_back(i);
    {
        Rng rp(Rng::derive(pair_seed, "pair", {0}));
        shuffle_indices(b_pos, rp);
        Rng rn(Rng::derive(pair_seed, "pair", {1}));
        shuffle_indices(b_neg, rn);
    }
    int need_pos = 0, need_neg = 0;
    for (int8_t y : a.labels) (y > 0 ? need_pos : need_neg)++;
    if (need_pos != static_cast<int>(b_pos.size()) || need_neg != static_cast<int>(b_neg.size()))
        throw DataError("concat_channels: per-label sample counts differ (a: " + std::to_string(need_pos) +
                        "+/" + std::to_string(need_neg) + "-, b: " + std::to_string(b_pos.size()) + "+/" +
                        std::to_string(b_neg.size()) + "-)");

    Dataset out;
    out.split = a.split;
    out.channels = a.channels + b.channels;
    out.height = a.height;
    out.width = a.width;
    out.labels = a.labels;
    out.class10 = a.class10.empty() ? b.class10 : a.class10;
    out.images.resize(static_cast<size_t>(a.n()) * out.sample_size());
    const int64_t a_sz = a.sample_size(), b_sz = b.sample_size();
    size_t ip = 0, in = 0;
    for (int i = 0; i < a.n(); ++i) {
        const int j = a.labels[static_cast<size_t>(i)] > 0 ? b_pos[ip++] : b_neg[in++];
        float* dst = out.images.data() + static_cast<int64_t>(i) * out.sample_size();
        std::memcpy(dst, a.image_ptr(i), static_cast<size_t>(a_sz) * sizeof(float));
        std::memcpy(dst + a_sz, b.image_ptr(j), static_cast<size_t>(b_sz) * sizeof(float));
    }
    out.provenance = "concat[" + a.provenance + " | " + b.provenance + "]";
    return out;
}

namespace {

constexpr int kCifarRecord = 3073;
constexpr int kCifarPerBatch = 10000;

void load_cifar_batch(const std::string& path, Dataset& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open CIFAR-10 batch '" + path + "'");
    is.seekg(0, std::ios::end);
    const int64_t size = is.tellg();
    is.seekg(0);
    const int64_t expect = static_cast<int64_t>(kCifarRecord) * kCifarPerBatch;
    if (size != expect)
        throw DataError("'" + path + "': expected " + std::to_string(expect) + " bytes, got " +
                        std::to_string(size) + " (parse stops at byte offset " +
                        std::to_string(size - size % kCifarRecord) + ")");
    std::vector<uint8_t> buf(static_cast<size_t>(expect));
    is.read(reinterpret_cast<char*>(buf.data()), expect);
    if (!is) throw DataError("'" + path + "': read failed");
    for (int r = 0; r < kCifarPerBatch; ++r) {
        const uint8_t* rec = buf.data() + static_cast<int64_t>(r) * kCifarRecord;
        if (rec[0] > 9)
            throw DataError("'" + path + "': corrupt record " + std::to_string(r) + " (label byte " +
                            std::to_string(rec[0]) + " > 9) at byte offset " +
                            std::to_string(static_cast<int64_t>(r) * kCifarRecord));
        out.class10.push_back(rec[0]);
        out.labels.push_back(0);
        for (int j = 0; j < 3072; ++j) out.images.push_back(static_cast<float>(rec[1 + j]) / 255.0f);
    }
}

}  // namespace

DatasetPair load_cifar10(const std::string& dir) {
    DatasetPair p;
    for (Dataset* d : {&p.train, &p.test}) {
        d->channels = 3;
        d->height = 32;
        d->width = 32;
    }
    p.train.split = "train";
    p.test.split = "test";
    for (int b = 1; b <= 5; ++b)
        load_cifar_batch(dir + "/data_batch_" + std::to_string(b) + ".bin", p.train);
    load_cifar_batch(dir + "/test_batch.bin", p.test);
    p.train.provenance = "cifar10 train dir=" + dir;
    p.test.provenance = "cifar10 test dir=" + dir;
    return p;
}

void binarize_labels(Dataset& d) {
    if (d.class10.size() != d.labels.size())
        throw DataError("binarize_labels: no 10-class provenance labels present");
    for (size_t i = 0; i < d.labels.size(); ++i) d.labels[i] = d.class10[i] < 5 ? -1 : 1;
    d.provenance += " binarized(c<5 -> -1)";
}

Dataset balanced_subset(const Dataset& d, int n, uint64_t seed) {
    if (n <= 0 || n > d.n()) throw DataError("subset size " + std::to_string(n) + " out of range");
    std::vector<int> pos, neg;
    for (int i = 0; i < d.n(); ++i) {
        const int8_t y = d.labels[static_cast<size_t>(i)];
        if (y == 0) throw DataError("balanced_subset: labels not binarized");
        (y > 0 ? pos : neg).push_back(i);
    }
    const int half = n / 2;
    if (static_cast<int>(pos.size()) < half || static_cast<int>(neg.size()) < n - half)
        throw DataError("balanced_subset: not enough samples per class");
    Rng rp(Rng::derive(seed, "subset", {0}));
    shuffle_indices(pos, rp);
    Rng rn(Rng::derive(seed, "subset", {1}));
    shuffle_indices(neg, rn);
    std::vector<int> pick(pos.begin(), pos.begin() + half);
    pick.insert(pick.end(), neg.begin(), neg.begin() + (n - half));
    std::sort(pick.begin(), pick.end());

    Dataset out;
    out.split = d.split;
    out.channels = d.channels;
    out.height = d.height;
    out.width = d.width;
    out.images.reserve(static_cast<size_t>(n) * d.sample_size());
    for (int i : pick) {
        out.labels.push_back(d.labels[static_cast<size_t>(i)]);
        if (!d.class10.empty()) out.class10.push_back(d.class10[static_cast<size_t>(i)]);
        const float* p = d.image_ptr(i);
        out.images.insert(out.images.end(), p, p + d.sample_size());
    }
    out.provenance = d.provenance + " subset(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")";
    return out;
}

NormStats train_norm_stats(const Dataset& train) {
    if (train.split != "train") throw DataError("normalization stats must come from the train split");
    const int c = train.channels;
    const int64_t hw = static_cast<int64_t>(train.height) * train.width;
    NormStats s;
    s.mean.assign(static_cast<size_t>(c), 0.0);
    s.stddev.assign(static_cast<size_t>(c), 0.0);
    const int64_t count = static_cast<int64_t>(train.n()) * hw;
    for (int ch = 0; ch < c; ++ch) {
        double m = 0;
        for (int i = 0; i < train.n(); ++i) {
            const float* p = train.image_ptr(i) + ch * hw;
            for (int64_t j = 0; j < hw; ++j) m += p[j];
        }
        m /= static_cast<double>(count);
        double var = 0;
        for (int i = 0; i < train.n(); ++i) {
            const float* p = train.image_ptr(i) + ch * hw;
            for (int64_t j = 0; j < hw; ++j) var += (p[j] - m) * (p[j] - m);
        }
        var /= static_cast<double>(count);
        if (var <= 0) throw DataError("channel " + std::to_string(ch) + " has zero variance; cannot standardize");
        s.mean[static_cast<size_t>(ch)] = m;
        s.stddev[static_cast<size_t>(ch)] = std::sqrt(var);
    }
    return s;
}

void standardize(Dataset& d, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != d.channels)
        throw DataError("normalization stats channel count mismatch");
    const int64_t hw = static_cast<int64_t>(d.height) * d.width;
    for (int i = 0; i < d.n(); ++i) {
        float* p = d.images.data() + static_cast<int64_t>(i) * d.sample_size();
        for (int ch = 0; ch < d.channels; ++ch) {
            const float m = static_cast<float>(stats.mean[static_cast<size_t>(ch)]);
            const float sd = static_cast<float>(stats.stddev[static_cast<size_t>(ch)]);
            for (int64_t j = 0; j < hw; ++j) p[ch * hw + j] = (p[ch * hw + j] - m) / sd;
        }
    }
    std::ostringstream prov;
    prov << " standardized(train-stats mean=";
    for (size_t ch = 0; ch < stats.mean.size(); ++ch) prov << (ch ? "," : "") << stats.mean[ch];
    prov << " std=";
    for (size_t ch = 0; ch < stats.stddev.size(); ++ch) prov << (ch ? "," : "") << stats.stddev[ch];
    prov << ")";
    d.provenance += prov.str();
}

TensorF ablate_channels(const TensorF& x, const std::vector<int>& keep) {
    if (x.rank() != 3) throw ShapeError("ablate_channels expects (C,H,W), got " + shape_to_string(x.shape));
    const int c = x.dim(0);
    std::vector<char> keep_mask(static_cast<size_t>(c), 0);
    for (int k : keep) {
        if (k < 0 || k >= c)
            throw DataError("ablate_channels: channel " + std::to_string(k) + " out of range [0," +
                            std::to_string(c - 1) + "]");
        keep_mask[static_cast<size_t>(k)] = 1;
    }
    TensorF out = x;
    const int64_t hw = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    for (int ch = 0; ch < c; ++ch)
        if (!keep_mask[static_cast<size_t>(ch)])
            std::fill(out.data.begin() + ch * hw, out.data.begin() + (ch + 1) * hw, 0.0f);
    return out;
}

namespace {
constexpr char kDataMagic[8] = {'A', 'N', 'I', 'S', 'O', 'D', 'A', 'T'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("dataset file truncated");
    return v;
}
}  // namespace

void save_dataset(const std::string& path, const Dataset& d) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    os.write(kDataMagic, 8);
    write_pod<uint32_t>(os, 1);
    write_pod<uint32_t>(os, static_cast<uint32_t>(d.n()));
    write_pod<uint32_t>(os, static_cast<uint32_t>(d.channels));
    write_pod<uint32_t>(os, static_cast<uint32_t>(d.height));
    write_pod<uint32_t>(os, static_cast<uint32_t>(d.width));
    os.write(reinterpret_cast<const char*>(d.labels.data()), d.n());
    os.write(reinterpret_cast<const char*>(d.images.data()),
             static_cast<std::streamsize>(d.images.size() * sizeof(float)));
    if (!os) throw DataError("write failed for '" + path + "'");
    std::ofstream prov(path + ".prov.txt");
    prov << "split = " << d.split << "\n" << "provenance = " << d.provenance << "\n";
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kDataMagic, 8) != 0)
        throw DataError("'" + path + "' is not a dataset file (bad magic)");
    if (read_pod<uint32_t>(is) != 1) throw DataError("unsupported dataset file version");
    Dataset d;
    const auto n = read_pod<uint32_t>(is);
    d.channels = static_cast<int>(read_pod<uint32_t>(is));
    d.height = static_cast<int>(read_pod<uint32_t>(is));
    d.width = static_cast<int>(read_pod<uint32_t>(is));
    d.labels.resize(n);
    is.read(reinterpret_cast<char*>(d.labels.data()), n);
    d.images.resize(static_cast<size_t>(n) * d.sample_size());
    is.read(reinterpret_cast<char*>(d.images.data()),
            static_cast<std::streamsize>(d.images.size() * sizeof(float)));
    if (!is) throw DataError("'" + path + "' truncated");
    d.provenance = "loaded from " + path;
    return d;
}

}  // namespace aniso
