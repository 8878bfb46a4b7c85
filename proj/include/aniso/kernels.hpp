#pragma once

#include <cstdint>

// Low-level dense and convolution kernels. The parallel flavors split work
// over disjoint output ranges with a fixed inner iteration order, so results
// are bit-identical for any thread count. The *_serial flavors are the plain
// single-loop references used by the benchmark target.

namespace aniso::kernels {

struct Conv2dDims {
    int in_c, in_h, in_w;
    int out_c, k, stride, pad;
    int out_h() const { return (in_h + 2 * pad - k) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - k) / stride + 1; }
};

template <typename T>
inline void conv2d_forward_serial(const T* x, const T* w, const T* b, T* y, const Conv2dDims& d) {
    const int oh = d.out_h(), ow = d.out_w();
    for (int o = 0; o < d.out_c; ++o) {
        const T* wo = w + static_cast<int64_t>(o) * d.in_c * d.k * d.k;
        T* yo = y + static_cast<int64_t>(o) * oh * ow;
        for (int r = 0; r < oh; ++r) {
            for (int cidx = 0; cidx < ow; ++cidx) {
                T acc = b ? b[o] : T(0);
                const int r0 = r * d.stride - d.pad;
                const int c0 = cidx * d.stride - d.pad;
                for (int ic = 0; ic < d.in_c; ++ic) {
                    const T* xc = x + static_cast<int64_t>(ic) * d.in_h * d.in_w;
                    const T* wc = wo + static_cast<int64_t>(ic) * d.k * d.k;
                    for (int kr = 0; kr < d.k; ++kr) {
                        const int ir = r0 + kr;
                        if (ir < 0 || ir >= d.in_h) continue;
                        for (int kc = 0; kc < d.k; ++kc) {
                            const int icol = c0 + kc;
                            if (icol < 0 || icol >= d.in_w) continue;
                            acc += wc[kr * d.k + kc] * xc[ir * d.in_w + icol];
                        }
                    }
                }
                yo[r * ow + cidx] = acc;
            }
        }
    }
}

template <typename T>
inline void conv2d_forward(const T* x, const T* w, const T* b, T* y, const Conv2dDims& d) {
    const int oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_c; ++o) {
        Conv2dDims one = d;
        one.out_c = 1;
        conv2d_forward_serial(x, w + static_cast<int64_t>(o) * d.in_c * d.k * d.k, b ? b + o : nullptr,
                              y + static_cast<int64_t>(o) * oh * ow, one);
    }
}

// Gradients accumulate into caller-zeroed gx / gw / gb.
template <typename T>
inline void conv2d_backward_serial(const T* x, const T* w, const T* gy, T* gx, T* gw, T* gb,
                                   const Conv2dDims& d) {
    const int oh = d.out_h(), ow = d.out_w();
    for (int o = 0; o < d.out_c; ++o) {
        const T* gyo = gy + static_cast<int64_t>(o) * oh * ow;
        const T* wo = w + static_cast<int64_t>(o) * d.in_c * d.k * d.k;
        T* gwo = gw + static_cast<int64_t>(o) * d.in_c * d.k * d.k;
        for (int r = 0; r < oh; ++r) {
            for (int cidx = 0; cidx < ow; ++cidx) {
                const T g = gyo[r * ow + cidx];
                if (gb) gb[o] += g;
                const int r0 = r * d.stride - d.pad;
                const int c0 = cidx * d.stride - d.pad;
                for (int ic = 0; ic < d.in_c; ++ic) {
                    const T* xc = x + static_cast<int64_t>(ic) * d.in_h * d.in_w;
                    const T* wc = wo + static_cast<int64_t>(ic) * d.k * d.k;
                    T* gxc = gx ? gx + static_cast<int64_t>(ic) * d.in_h * d.in_w : nullptr;
                    T* gwc = gwo + static_cast<int64_t>(ic) * d.k * d.k;
                    for (int kr = 0; kr < d.k; ++kr) {
                        const int ir = r0 + kr;
                        if (ir < 0 || ir >= d.in_h) continue;
                        for (int kc = 0; kc < d.k; ++kc) {
                            const int icol = c0 + kc;
                            if (icol < 0 || icol >= d.in_w) continue;
                            gwc[kr * d.k + kc] += g * xc[ir * d.in_w + icol];
                            if (gxc) gxc[ir * d.in_w + icol] += g * wc[kr * d.k + kc];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
inline void conv2d_backward(const T* x, const T* w, const T* gy, T* gx, T* gw, T* gb, const Conv2dDims& d) {
    const int oh = d.out_h(), ow = d.out_w();
    // gw and gb rows are owned per output channel.
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_c; ++o) {
        const T* gyo = gy + static_cast<int64_t>(o) * oh * ow;
        T* gwo = gw + static_cast<int64_t>(o) * d.in_c * d.k * d.k;
        for (int r = 0; r < oh; ++r) {
            for (int cidx = 0; cidx < ow; ++cidx) {
                const T g = gyo[r * ow + cidx];
                if (gb) gb[o] += g;
                const int r0 = r * d.stride - d.pad;
                const int c0 = cidx * d.stride - d.pad;
                for (int ic = 0; ic < d.in_c; ++ic) {
                    const T* xc = x + static_cast<int64_t>(ic) * d.in_h * d.in_w;
                    T* gwc = gwo + static_cast<int64_t>(ic) * d.k * d.k;
                    for (int kr = 0; kr < d.k; ++kr) {
                        const int ir = r0 + kr;
                        if (ir < 0 || ir >= d.in_h) continue;
                        for (int kc = 0; kc < d.k; ++kc) {
                            const int icol = c0 + kc;
                            if (icol < 0 || icol >= d.in_w) continue;
                            gwc[kr * d.k + kc] += g * xc[ir * d.in_w + icol];
                        }
                    }
                }
            }
        }
    }
    if (!gx) return;
    // gx slices are owned per input channel; the o loop stays innermost and ordered.
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < d.in_c; ++ic) {
        T* gxc = gx + static_cast<int64_t>(ic) * d.in_h * d.in_w;
        for (int o = 0; o < d.out_c; ++o) {
            const T* gyo = gy + static_cast<int64_t>(o) * oh * ow;
            const T* wc = w + (static_cast<int64_t>(o) * d.in_c + ic) * d.k * d.k;
            for (int r = 0; r < oh; ++r) {
                for (int cidx = 0; cidx < ow; ++cidx) {
                    const T g = gyo[r * ow + cidx];
                    const int r0 = r * d.stride - d.pad;
                    const int c0 = cidx * d.stride - d.pad;
                    for (int kr = 0; kr < d.k; ++kr) {
                        const int ir = r0 + kr;
                        if (ir < 0 || ir >= d.in_h) continue;
                        for (int kc = 0; kc < d.k; ++kc) {
                            const int icol = c0 + kc;
                            if (icol < 0 || icol >= d.in_w) continue;
                            gxc[ir * d.in_w + icol] += g * wc[kr * d.k + kc];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
inline void dense_forward_serial(const T* w, const T* b, const T* x, T* y, int out, int in) {
    for (int o = 0; o < out; ++o) {
        T acc = b ? b[o] : T(0);
        const T* wo = w + static_cast<int64_t>(o) * in;
        for (int j = 0; j < in; ++j) acc += wo[j] * x[j];
        y[o] = acc;
    }
}

template <typename T>
inline void dense_forward(const T* w, const T* b, const T* x, T* y, int out, int in) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        T acc = b ? b[o] : T(0);
        const T* wo = w + static_cast<int64_t>(o) * in;
        for (int j = 0; j < in; ++j) acc += wo[j] * x[j];
        y[o] = acc;
    }
}

template <typename T>
inline void dense_backward_serial(const T* w, const T* x, const T* gy, T* gx, T* gw, T* gb, int out, int in) {
    for (int o = 0; o < out; ++o) {
        const T g = gy[o];
        if (gb) gb[o] += g;
        const T* wo = w + static_cast<int64_t>(o) * in;
        T* gwo = gw + static_cast<int64_t>(o) * in;
        for (int j = 0; j < in; ++j) {
            gwo[j] += g * x[j];
            if (gx) gx[j] += g * wo[j];
        }
    }
}

template <typename T>
inline void dense_backward(const T* w, const T* x, const T* gy, T* gx, T* gw, T* gb, int out, int in) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        const T g = gy[o];
        if (gb) gb[o] += g;
        const T* wo = w + static_cast<int64_t>(o) * in;
        T* gwo = gw + static_cast<int64_t>(o) * in;
        for (int j = 0; j < in; ++j) gwo[j] += g * x[j];
    }
    if (!gx) return;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < in; ++j) {
        T acc = 0;
        for (int o = 0; o < out; ++o) acc += gy[o] * w[static_cast<int64_t>(o) * in + j];
        gx[j] += acc;
    }
}

}  // namespace aniso::kernels
