// Compares the OpenMP kernels against their serial references: wall time and
// a max-abs-difference check (expected to be exactly zero, since the parallel
// flavors keep the serial iteration order within each output slice).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aniso/kernels.hpp"
#include "aniso/rng.hpp"

using aniso::Rng;
namespace k = aniso::kernels;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

template <typename F>
double time_ms(int reps, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void bench_conv(const k::Conv2dDims& d, int reps) {
    const size_t xs = static_cast<size_t>(d.in_c) * d.in_h * d.in_w;
    const size_t ws = static_cast<size_t>(d.out_c) * d.in_c * d.k * d.k;
    const size_t ys = static_cast<size_t>(d.out_c) * d.out_h() * d.out_w();
    auto x = random_vec(xs, 1), w = random_vec(ws, 2), b = random_vec(static_cast<size_t>(d.out_c), 3);
    auto gy = random_vec(ys, 4);
    std::vector<float> y_s(ys), y_p(ys);
    std::vector<float> gx_s(xs), gw_s(ws), gb_s(static_cast<size_t>(d.out_c));
    std::vector<float> gx_p(xs), gw_p(ws), gb_p(static_cast<size_t>(d.out_c));

    const double tf_s = time_ms(reps, [&] { k::conv2d_forward_serial(x.data(), w.data(), b.data(), y_s.data(), d); });
    const double tf_p = time_ms(reps, [&] { k::conv2d_forward(x.data(), w.data(), b.data(), y_p.data(), d); });
    const double tb_s = time_ms(reps, [&] {
        std::fill(gx_s.begin(), gx_s.end(), 0.0f);
        std::fill(gw_s.begin(), gw_s.end(), 0.0f);
        std::fill(gb_s.begin(), gb_s.end(), 0.0f);
        k::conv2d_backward_serial(x.data(), w.data(), gy.data(), gx_s.data(), gw_s.data(), gb_s.data(), d);
    });
    const double tb_p = time_ms(reps, [&] {
        std::fill(gx_p.begin(), gx_p.end(), 0.0f);
        std::fill(gw_p.begin(), gw_p.end(), 0.0f);
        std::fill(gb_p.begin(), gb_p.end(), 0.0f);
        k::conv2d_backward(x.data(), w.data(), gy.data(), gx_p.data(), gw_p.data(), gb_p.data(), d);
    });
    const double dy = max_abs_diff(y_s, y_p);
    const double dg = std::max({max_abs_diff(gx_s, gx_p), max_abs_diff(gw_s, gw_p), max_abs_diff(gb_s, gb_p)});
    std::printf("conv2d %dx%dx%d -> %d k=%d: fwd serial %.3f ms, omp %.3f ms (%.2fx) | "
                "bwd serial %.3f ms, omp %.3f ms (%.2fx) | max diff fwd %.1e bwd %.1e\n",
                d.in_c, d.in_h, d.in_w, d.out_c, d.k, tf_s, tf_p, tf_s / tf_p, tb_s, tb_p, tb_s / tb_p, dy, dg);
}

void bench_dense(int out, int in, int reps) {
    auto w = random_vec(static_cast<size_t>(out) * in, 10), b = random_vec(static_cast<size_t>(out), 11);
    auto x = random_vec(static_cast<size_t>(in), 12), gy = random_vec(static_cast<size_t>(out), 13);
    std::vector<float> y_s(static_cast<size_t>(out)), y_p(static_cast<size_t>(out));
    std::vector<float> gx_s(static_cast<size_t>(in)), gw_s(static_cast<size_t>(out) * in), gb_s(static_cast<size_t>(out));
    std::vector<float> gx_p(static_cast<size_t>(in)), gw_p(static_cast<size_t>(out) * in), gb_p(static_cast<size_t>(out));

    const double tf_s = time_ms(reps, [&] { k::dense_forward_serial(w.data(), b.data(), x.data(), y_s.data(), out, in); });
    const double tf_p = time_ms(reps, [&] { k::dense_forward(w.data(), b.data(), x.data(), y_p.data(), out, in); });
    const double tb_s = time_ms(reps, [&] {
        std::fill(gx_s.begin(), gx_s.end(), 0.0f);
        std::fill(gw_s.begin(), gw_s.end(), 0.0f);
        std::fill(gb_s.begin(), gb_s.end(), 0.0f);
        k::dense_backward_serial(w.data(), x.data(), gy.data(), gx_s.data(), gw_s.data(), gb_s.data(), out, in);
    });
    const double tb_p = time_ms(reps, [&] {
        std::fill(gx_p.begin(), gx_p.end(), 0.0f);
        std::fill(gw_p.begin(), gw_p.end(), 0.0f);
        std::fill(gb_p.begin(), gb_p.end(), 0.0f);
        k::dense_backward(w.data(), x.data(), gy.data(), gx_p.data(), gw_p.data(), gb_p.data(), out, in);
    });
    const double dy = max_abs_diff(y_s, y_p);
    const double dg = std::max({max_abs_diff(gx_s, gx_p), max_abs_diff(gw_s, gw_p), max_abs_diff(gb_s, gb_p)});
    std::printf("dense %dx%d: fwd serial %.3f ms, omp %.3f ms (%.2fx) | "
                "bwd serial %.3f ms, omp %.3f ms (%.2fx) | max diff fwd %.1e bwd %.1e\n",
                out, in, tf_s, tf_p, tf_s / tf_p, tb_s, tb_p, tb_s / tb_p, dy, dg);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel flavors run serially\n");
#endif
    bench_conv({.in_c = 3, .in_h = 32, .in_w = 32, .out_c = 16, .k = 3, .stride = 1, .pad = 1}, 50);
    bench_conv({.in_c = 16, .in_h = 32, .in_w = 32, .out_c = 32, .k = 3, .stride = 2, .pad = 1}, 50);
    bench_conv({.in_c = 6, .in_h = 28, .in_w = 28, .out_c = 16, .k = 5, .stride = 1, .pad = 0}, 50);
    bench_dense(1024, 1024, 200);
    bench_dense(100, 4096, 200);
    return 0;
}
