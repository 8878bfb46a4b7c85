#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aniso/models.hpp"

namespace aniso {

// Symmetric d x d input-gradient covariance, accumulated in double precision.
struct GradientCovariance {
    int d = 0;
    int height = 0, width = 0;
    std::vector<double> m;  // row-major d*d
    uint64_t model_hash = 0;
    uint64_t cfg_digest = 0;
    int64_t n_samples = 0;

    double at(int i, int j) const { return m[static_cast<size_t>(i) * d + j]; }
};

struct NadEstimationConfig {
    int n_inits = 512;
    int n_inputs_per_init = 4;
    enum class InputLaw { gaussian, zero } input_law = InputLaw::gaussian;
    uint64_t seed = 0;

    uint64_t digest() const;
};

// Monte Carlo estimate of E[grad_x f(x) grad_x f(x)^T] over fresh
// initializations. Deterministic for a fixed config regardless of thread
// count (partial sums merged in ascending init order).
GradientCovariance estimate_covariance(const ModelSpec& spec, const NadEstimationConfig& cfg);

// Eigenvectors (columns, orthonormal) with eigenvalues sorted descending.
// NAD index 1 carries the largest eigenvalue.
struct NadBasis {
    int d = 0;
    int height = 0, width = 0;
    std::vector<double> eigenvalues;  // descending
    std::vector<double> vectors;      // column-major d*d; column k = NAD k+1
    uint64_t model_hash = 0;
    uint64_t cfg_digest = 0;
};

class EigenError : public std::runtime_error {
public:
    explicit EigenError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cyclic Jacobi; converges to off-diagonal Frobenius norm <= 1e-12 * |C|_F.
// Ties sorted by original column index; each eigenvector's largest-magnitude
// entry is made positive.
NadBasis eigendecompose(const GradientCovariance& c, int max_sweeps = 100);

// v^T C v for a unit vector v
double alignment(const GradientCovariance& c, const std::vector<double>& v);

// 1-based; index 1 = largest eigenvalue. Returns a unit vector of length d.
std::vector<double> nad_vector(const NadBasis& basis, int index);

// ANISONAD little-endian binary
void save_basis(const std::string& path, const NadBasis& b);
NadBasis load_basis(const std::string& path);

}  // namespace aniso
