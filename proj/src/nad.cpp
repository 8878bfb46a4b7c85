#include "aniso/nad.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "aniso/rng.hpp"

namespace aniso {

uint64_t NadEstimationConfig::digest() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<uint64_t>(n_inits));
    mix(static_cast<uint64_t>(n_inputs_per_init));
    mix(static_cast<uint64_t>(input_law));
    mix(seed);
    return h;
}

GradientCovariance estimate_covariance(const ModelSpec& spec, const NadEstimationConfig& cfg) {
    if (spec.input_shape[0] != 1)
        throw ShapeError("NAD estimation requires a 1-channel input model, got " +
                         std::to_string(spec.input_shape[0]) + " channels");
    if (cfg.n_inits < 1 || cfg.n_inputs_per_init < 1)
        throw std::invalid_argument("NAD estimation needs n_inits >= 1 and n_inputs_per_init >= 1");

    const int d = static_cast<int>(spec.input_size());
    GradientCovariance cov;
    cov.d = d;
    cov.height = spec.input_shape[1];
    cov.width = spec.input_shape[2];
    cov.model_hash = spec.hash();
    cov.cfg_digest = cfg.digest();
    cov.n_samples = static_cast<int64_t>(cfg.n_inits) * cfg.n_inputs_per_init;
    cov.m.assign(static_cast<size_t>(d) * d, 0.0);

    const int chunk = 16;
    const int nchunks = (cfg.n_inits + chunk - 1) / chunk;
    uint64_t bad_init_seed = 0;
    bool failed = false;

#pragma omp parallel for ordered schedule(static, 1)
    for (int c = 0; c < nchunks; ++c) {
        std::vector<double> partial(static_cast<size_t>(d) * d, 0.0);
        std::vector<float> g(static_cast<size_t>(d));
        const int i0 = c * chunk, i1 = std::min(cfg.n_inits, i0 + chunk);
        for (int i = i0; i < i1 && !failed; ++i) {
            const uint64_t init_seed = Rng::derive(cfg.seed, "init", {static_cast<uint64_t>(i)});
            ParamVector params = build(spec, InitScheme{.seed = init_seed});
            ModelRunner<float> runner(spec, params);
            for (int j = 0; j < cfg.n_inputs_per_init; ++j) {
                TensorF x = TensorF::zeros({1, cov.height, cov.width});
                if (cfg.input_law == NadEstimationConfig::InputLaw::gaussian) {
                    Rng rng(Rng::derive(cfg.seed, "input", {static_cast<uint64_t>(i), static_cast<uint64_t>(j)}));
                    for (auto& v : x.data) v = static_cast<float>(rng.normal());
                }
                auto gb = runner.loss_and_grads(x, 0, true);
                for (int a = 0; a < d; ++a) {
                    g[static_cast<size_t>(a)] = gb.input_grad[a];
                    if (!std::isfinite(gb.input_grad[a])) {
#pragma omp critical
                        {
                            failed = true;
                            bad_init_seed = init_seed;
                        }
                    }
                }
                if (failed) break;
                // upper triangle only; mirrored after the merge
                for (int a = 0; a < d; ++a) {
                    const double ga = g[static_cast<size_t>(a)];
                    double* row = partial.data() + static_cast<size_t>(a) * d;
                    for (int b = a; b < d; ++b) row[b] += ga * g[static_cast<size_t>(b)];
                }
            }
        }
#pragma omp ordered
        {
            for (size_t k = 0; k < cov.m.size(); ++k) cov.m[k] += partial[k];
        }
    }
    if (failed)
        throw NumericError("non-finite input gradient at init seed " + std::to_string(bad_init_seed));

    const double inv_n = 1.0 / static_cast<double>(cov.n_samples);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            const double v = cov.m[static_cast<size_t>(a) * d + b] * inv_n;
            cov.m[static_cast<size_t>(a) * d + b] = v;
            cov.m[static_cast<size_t>(b) * d + a] = v;
        }
    return cov;
}

namespace {

double off_diagonal_norm(const std::vector<double>& a, int d) {
    double s = 0;
#pragma omp parallel for reduction(+ : s) schedule(static)
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) s += a[static_cast<size_t>(i) * d + j] * a[static_cast<size_t>(i) * d + j];
    return std::sqrt(s);
}

}  // namespace

NadBasis eigendecompose(const GradientCovariance& cov, int max_sweeps) {
    const int d = cov.d;
    // symmetry guard
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (std::abs(cov.at(i, j) - cov.at(j, i)) > 1e-12 * (1.0 + std::abs(cov.at(i, j))))
                throw EigenError("covariance is not symmetric at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");

    std::vector<double> a = cov.m;                       // working copy, row-major
    std::vector<double> v(static_cast<size_t>(d) * d, 0.0);  // accumulated rotations, row-major
    for (int i = 0; i < d; ++i) v[static_cast<size_t>(i) * d + i] = 1.0;

    double norm_f = 0;
    for (double x : a) norm_f += x * x;
    norm_f = std::sqrt(norm_f);
    const double tol = 1e-12 * norm_f;

    double off = off_diagonal_norm(a, d);
    int sweep = 0;
    while (off > tol && norm_f > 0) {
        if (sweep++ >= max_sweeps)
            throw EigenError("Jacobi did not converge after " + std::to_string(max_sweeps) +
                             " sweeps (off-diagonal residual " + std::to_string(off) + ")");
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[static_cast<size_t>(p) * d + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<size_t>(p) * d + p];
                const double aqq = a[static_cast<size_t>(q) * d + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // rows/columns p and q of A
#pragma omp parallel for schedule(static)
                for (int k = 0; k < d; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a[static_cast<size_t>(k) * d + p];
                    const double akq = a[static_cast<size_t>(k) * d + q];
                    a[static_cast<size_t>(k) * d + p] = c * akp - s * akq;
                    a[static_cast<size_t>(k) * d + q] = s * akp + c * akq;
                    a[static_cast<size_t>(p) * d + k] = a[static_cast<size_t>(k) * d + p];
                    a[static_cast<size_t>(q) * d + k] = a[static_cast<size_t>(k) * d + q];
                }
                a[static_cast<size_t>(p) * d + p] = app - t * apq;
                a[static_cast<size_t>(q) * d + q] = aqq + t * apq;
                a[static_cast<size_t>(p) * d + q] = 0.0;
                a[static_cast<size_t>(q) * d + p] = 0.0;

                // accumulate V <- V J (columns p, q)
#pragma omp parallel for schedule(static)
                for (int k = 0; k < d; ++k) {
                    const double vkp = v[static_cast<size_t>(k) * d + p];
                    const double vkq = v[static_cast<size_t>(k) * d + q];
                    v[static_cast<size_t>(k) * d + p] = c * vkp - s * vkq;
                    v[static_cast<size_t>(k) * d + q] = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(a, d);
    }

    // sort descending, ties by original column index
    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return a[static_cast<size_t>(i) * d + i] > a[static_cast<size_t>(j) * d + j];
    });

    NadBasis basis;
    basis.d = d;
    basis.height = cov.height;
    basis.width = cov.width;
    basis.model_hash = cov.model_hash;
    basis.cfg_digest = cov.cfg_digest;
    basis.eigenvalues.resize(static_cast<size_t>(d));
    basis.vectors.resize(static_cast<size_t>(d) * d);
    for (int k = 0; k < d; ++k) {
        const int src = order[static_cast<size_t>(k)];
        basis.eigenvalues[static_cast<size_t>(k)] = a[static_cast<size_t>(src) * d + src];
        double* col = basis.vectors.data() + static_cast<size_t>(k) * d;
        for (int r = 0; r < d; ++r) col[r] = v[static_cast<size_t>(r) * d + src];
        // sign convention: largest-magnitude entry positive (first on ties)
        int imax = 0;
        for (int r = 1; r < d; ++r)
            if (std::abs(col[r]) > std::abs(col[imax])) imax = r;
        if (col[imax] < 0)
            for (int r = 0; r < d; ++r) col[r] = -col[r];
    }
    return basis;
}

double alignment(const GradientCovariance& cov, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != cov.d)
        throw ShapeError("alignment: vector length " + std::to_string(v.size()) + " != d " +
                         std::to_string(cov.d));
    double norm = 0;
    for (double x : v) norm += x * x;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-6)
        throw std::invalid_argument("alignment: |v| = " + std::to_string(std::sqrt(norm)) +
                                    " is not a unit vector");
    double s = 0;
    for (int i = 0; i < cov.d; ++i) {
        double row = 0;
        for (int j = 0; j < cov.d; ++j) row += cov.at(i, j) * v[static_cast<size_t>(j)];
        s += v[static_cast<size_t>(i)] * row;
    }
    return s;
}

std::vector<double> nad_vector(const NadBasis& basis, int index) {
    if (index < 1 || index > basis.d)
        throw std::out_of_range("NAD index " + std::to_string(index) + " out of range [1," +
                                std::to_string(basis.d) + "]");
    const double* col = basis.vectors.data() + static_cast<size_t>(index - 1) * basis.d;
    return std::vector<double>(col, col + basis.d);
}

namespace {
constexpr char kNadMagic[8] = {'A', 'N', 'I', 'S', 'O', 'N', 'A', 'D'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("NAD basis file truncated");
    return v;
}
}  // namespace

void save_basis(const std::string& path, const NadBasis& b) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(kNadMagic, 8);
    write_pod<uint32_t>(os, 1);
    write_pod<uint32_t>(os, static_cast<uint32_t>(b.d));
    write_pod<uint32_t>(os, static_cast<uint32_t>(b.height));
    write_pod<uint32_t>(os, static_cast<uint32_t>(b.width));
    write_pod<uint64_t>(os, b.model_hash);
    write_pod<uint64_t>(os, b.cfg_digest);
    os.write(reinterpret_cast<const char*>(b.eigenvalues.data()),
             static_cast<std::streamsize>(b.eigenvalues.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(b.vectors.data()),
             static_cast<std::streamsize>(b.vectors.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

NadBasis load_basis(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kNadMagic, 8) != 0)
        throw std::runtime_error("'" + path + "' is not a NAD basis file (bad magic)");
    if (read_pod<uint32_t>(is) != 1) throw std::runtime_error("unsupported NAD basis file version");
    NadBasis b;
    b.d = static_cast<int>(read_pod<uint32_t>(is));
    b.height = static_cast<int>(read_pod<uint32_t>(is));
    b.width = static_cast<int>(read_pod<uint32_t>(is));
    b.model_hash = read_pod<uint64_t>(is);
    b.cfg_digest = read_pod<uint64_t>(is);
    b.eigenvalues.resize(static_cast<size_t>(b.d));
    is.read(reinterpret_cast<char*>(b.eigenvalues.data()),
            static_cast<std::streamsize>(b.eigenvalues.size() * sizeof(double)));
    b.vectors.resize(static_cast<size_t>(b.d) * b.d);
    is.read(reinterpret_cast<char*>(b.vectors.data()),
            static_cast<std::streamsize>(b.vectors.size() * sizeof(double)));
    if (!is) throw std::runtime_error("'" + path + "' truncated");
    return b;
}

}  // namespace aniso
