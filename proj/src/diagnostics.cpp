#include "aniso/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "aniso/training.hpp"

namespace aniso {

AblationReport ablation_eval(const ModelSpec& spec, const ParamVector& params, const Dataset& test,
                             std::vector<int> block1, std::vector<int> block2) {
    std::vector<int> all = block1;
    all.insert(all.end(), block2.begin(), block2.end());
    std::sort(all.begin(), all.end());
    for (int c = 0; c < test.channels; ++c)
        if (c >= static_cast<int>(all.size()) || all[static_cast<size_t>(c)] != c)
            throw DataError("ablation blocks must partition the channel set {0.." +
                            std::to_string(test.channels - 1) + "}");
    if (static_cast<int>(all.size()) != test.channels)
        throw DataError("ablation blocks must partition the channel set exactly");

    AblationReport r;
    r.block1 = std::move(block1);
    r.block2 = std::move(block2);
    r.acc_both = evaluate_accuracy(spec, params, test);
    r.acc_block1 = evaluate_accuracy(spec, params, test, &r.block1);
    r.acc_block2 = evaluate_accuracy(spec, params, test, &r.block2);
    return r;
}

namespace {

void validate_plane(const ModelSpec& spec, const PlaneSpec& plane) {
    const size_t d = static_cast<size_t>(spec.input_size());
    if (plane.u1.size() != d || plane.u2.size() != d)
        throw ShapeError("plane directions must have length " + std::to_string(d));
    if (!plane.base.empty() && plane.base.size() != d)
        throw ShapeError("plane base point must have length " + std::to_string(d));
    double n1 = 0, n2 = 0, dot = 0;
    for (size_t i = 0; i < d; ++i) {
        n1 += plane.u1[i] * plane.u1[i];
        n2 += plane.u2[i] * plane.u2[i];
        dot += plane.u1[i] * plane.u2[i];
    }
    if (std::abs(std::sqrt(n1) - 1.0) > 1e-6 || std::abs(std::sqrt(n2) - 1.0) > 1e-6)
        throw std::invalid_argument("plane directions must be unit vectors");
    if (std::abs(dot) > 1e-6) throw std::invalid_argument("plane directions must be orthogonal");
    if (plane.resolution < 2) throw std::invalid_argument("plane resolution must be >= 2");
}

}  // namespace

CrossSection cross_section(const ModelSpec& spec, const ParamVector& params, const PlaneSpec& plane) {
    validate_plane(spec, plane);
    const int res = plane.resolution;
    const int64_t d = spec.input_size();

    CrossSection cs;
    cs.resolution = res;
    cs.half_range = plane.half_range;
    cs.logits.assign(static_cast<size_t>(res) * res, 0.0f);

    ModelRunner<float> runner(spec, params);
    const auto [c, h, w] = spec.input_shape;
#pragma omp parallel for schedule(static)
    for (int ia = 0; ia < res; ++ia) {
        TensorF x = TensorF::zeros({c, h, w});
        const double a = cs.coord(ia);
        for (int ib = 0; ib < res; ++ib) {
            const double b = cs.coord(ib);
            for (int64_t i = 0; i < d; ++i)
                x[i] = static_cast<float>((plane.base.empty() ? 0.0 : plane.base[static_cast<size_t>(i)]) +
                                          a * plane.u1[static_cast<size_t>(i)] +
                                          b * plane.u2[static_cast<size_t>(i)]);
            cs.logits[static_cast<size_t>(ia) * res + ib] = runner.predict(x);
        }
    }

    cs.signs.resize(cs.logits.size());
    for (size_t i = 0; i < cs.logits.size(); ++i) cs.signs[i] = cs.logits[i] >= 0.0f ? 1 : -1;

    // zero crossings along both axes
    auto logit = [&](int ia, int ib) { return static_cast<double>(cs.logits[static_cast<size_t>(ia) * res + ib]); };
    for (int ia = 0; ia < res; ++ia) {
        for (int ib = 0; ib + 1 < res; ++ib) {
            const double z0 = logit(ia, ib), z1 = logit(ia, ib + 1);
            if (z0 == 0.0) cs.boundary.push_back({cs.coord(ia), cs.coord(ib)});
            if (z0 * z1 < 0.0) {
                const double t = z0 / (z0 - z1);
                cs.boundary.push_back({cs.coord(ia), cs.coord(ib) + t * (cs.coord(ib + 1) - cs.coord(ib))});
            }
        }
    }
    for (int ib = 0; ib < res; ++ib) {
        for (int ia = 0; ia + 1 < res; ++ia) {
            const double z0 = logit(ia, ib), z1 = logit(ia + 1, ib);
            if (z0 * z1 < 0.0) {
                const double t = z0 / (z0 - z1);
                cs.boundary.push_back({cs.coord(ia) + t * (cs.coord(ia + 1) - cs.coord(ia)), cs.coord(ib)});
            }
        }
    }

    cs.tilt_deg = cs.boundary.size() >= 2 ? tilt_angle(cs.boundary) : std::numeric_limits<double>::quiet_NaN();
    return cs;
}

double tilt_angle(const std::vector<std::array<double, 2>>& pts) {
    if (pts.size() < 2)
        throw BoundaryError("no decision boundary crosses the cross-section window (" +
                            std::to_string(pts.size()) + " boundary points)");
    double ma = 0, mb = 0;
    for (const auto& p : pts) {
        ma += p[0];
        mb += p[1];
    }
    ma /= static_cast<double>(pts.size());
    mb /= static_cast<double>(pts.size());
    double saa = 0, sbb = 0, sab = 0;
    for (const auto& p : pts) {
        const double da = p[0] - ma, db = p[1] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    // principal axis of the scatter matrix
    const double angle = 0.5 * std::atan2(2.0 * sab, saa - sbb);
    double deg = angle * 180.0 / 3.14159265358979323846;
    while (deg < 0) deg += 180.0;
    while (deg >= 180.0) deg -= 180.0;
    return deg;
}

double tilt_angle(const CrossSection& cs) { return tilt_angle(cs.boundary); }

std::array<double, 2> in_plane_normal(const ModelSpec& spec, const ParamVector& params,
                                      const PlaneSpec& plane) {
    validate_plane(spec, plane);
    const auto [c, h, w] = spec.input_shape;
    const int64_t d = spec.input_size();
    TensorD x = TensorD::zeros({c, h, w});
    if (!plane.base.empty())
        for (int64_t i = 0; i < d; ++i) x[i] = plane.base[static_cast<size_t>(i)];
    auto gb = loss_and_grads<double>(spec, params, x, 0, true);
    double na = 0, nb = 0;
    for (int64_t i = 0; i < d; ++i) {
        na += gb.input_grad[i] * plane.u1[static_cast<size_t>(i)];
        nb += gb.input_grad[i] * plane.u2[static_cast<size_t>(i)];
    }
    return {na, nb};
}

void write_cross_section_csv(const std::string& path, const CrossSection& cs) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << "a,b,logit\n";
    for (int ia = 0; ia < cs.resolution; ++ia)
        for (int ib = 0; ib < cs.resolution; ++ib)
            os << cs.coord(ia) << "," << cs.coord(ib) << ","
               << cs.logits[static_cast<size_t>(ia) * cs.resolution + ib] << "\n";
}

void write_sign_pgm(const std::string& path, const CrossSection& cs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << "P5\n" << cs.resolution << " " << cs.resolution << "\n255\n";
    for (int row = 0; row < cs.resolution; ++row) {
        const int ib = cs.resolution - 1 - row;  // b decreases down the image
        for (int ia = 0; ia < cs.resolution; ++ia) {
            const unsigned char px = cs.signs[static_cast<size_t>(ia) * cs.resolution + ib] > 0 ? 255 : 0;
            os.write(reinterpret_cast<const char*>(&px), 1);
        }
    }
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace aniso
