#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aniso/datagen.hpp"
#include "aniso/models.hpp"

namespace aniso {

class BoundaryError : public std::runtime_error {
public:
    explicit BoundaryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AblationReport {
    double acc_both = 0, acc_block1 = 0, acc_block2 = 0;
    std::vector<int> block1, block2;
};

// Test accuracy with all channels, then with each channel block alone.
// block1 and block2 must partition the channel set.
AblationReport ablation_eval(const ModelSpec& spec, const ParamVector& params, const Dataset& test,
                             std::vector<int> block1, std::vector<int> block2);

// 2-D slice through input space spanned by orthonormal directions u1, u2,
// anchored at `base` (empty = origin).
struct PlaneSpec {
    std::vector<double> u1, u2;  // length = C*H*W of the model input
    std::vector<double> base;    // empty means all-zero
    double half_range = 2.5;
    int resolution = 201;
};

struct CrossSection {
    int resolution = 0;
    double half_range = 0;
    std::vector<float> logits;  // row-major over (ia, ib); a = axis u1, b = axis u2
    std::vector<int8_t> signs;
    std::vector<std::array<double, 2>> boundary;  // (a, b) zero crossings
    double tilt_deg = 0;                          // NaN when no boundary crosses the window

    double coord(int i) const {
        return -half_range + 2.0 * half_range * static_cast<double>(i) / (resolution - 1);
    }
};

CrossSection cross_section(const ModelSpec& spec, const ParamVector& params, const PlaneSpec& plane);

// Total-least-squares line angle from the u1 axis, degrees in [0, 180).
double tilt_angle(const std::vector<std::array<double, 2>>& boundary_points);
double tilt_angle(const CrossSection& cs);

// (df/da, df/db) of the logit at the plane's base point.
std::array<double, 2> in_plane_normal(const ModelSpec& spec, const ParamVector& params, const PlaneSpec& plane);

void write_cross_section_csv(const std::string& path, const CrossSection& cs);
// P5 PGM of the sign grid; 0 = negative class, 255 = positive class.
// Rows run b from +half_range down, columns a from -half_range up.
void write_sign_pgm(const std::string& path, const CrossSection& cs);

}  // namespace aniso
