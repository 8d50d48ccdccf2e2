#pragma once

// Test-only reference implementations. Nothing here calls into the code
// paths it is used to check.

#include <cmath>
#include <cstddef>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"
#include "rmgan/common/rng.hpp"

namespace rmgan::test {

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    ad::Tensor t(std::move(shape));
    for (double& v : t.mutable_data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

// Direct six-loop cross-correlation.
inline std::vector<double> naive_conv2d(const ad::Tensor& x, const ad::Tensor& k, const ad::Tensor& b,
                                        std::size_t stride, std::size_t pad, std::size_t& out_h,
                                        std::size_t& out_w) {
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t F = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    out_h = (H + 2 * pad - kh) / stride + 1;
    out_w = (W + 2 * pad - kw) / stride + 1;
    std::vector<double> out(N * F * out_h * out_w, 0.0);
    const auto xd = x.data();
    const auto kd = k.data();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t oy = 0; oy < out_h; ++oy)
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    double acc = b.data()[f];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t i = 0; i < kh; ++i)
                            for (std::size_t j = 0; j < kw; ++j) {
                                const long y = static_cast<long>(oy * stride + i) - static_cast<long>(pad);
                                const long xx = static_cast<long>(ox * stride + j) - static_cast<long>(pad);
                                if (y < 0 || xx < 0 || y >= static_cast<long>(H) || xx >= static_cast<long>(W))
                                    continue;
                                acc += xd[((n * C + c) * H + y) * W + xx] * kd[((f * C + c) * kh + i) * kw + j];
                            }
                    out[((n * F + f) * out_h + oy) * out_w + ox] = acc;
                }
    return out;
}

// Direct scatter form of the transposed convolution: every input pixel
// stamps the kernel into the output.
inline std::vector<double> naive_conv2d_transpose(const ad::Tensor& x, const ad::Tensor& k,
                                                  const ad::Tensor& b, std::size_t stride, std::size_t pad,
                                                  std::size_t& out_h, std::size_t& out_w) {
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t F = k.dim(1), kh = k.dim(2), kw = k.dim(3);
    out_h = (H - 1) * stride + kh - 2 * pad;
    out_w = (W - 1) * stride + kw - 2 * pad;
    std::vector<double> out(N * F * out_h * out_w, 0.0);
    const auto xd = x.data();
    const auto kd = k.data();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t p = 0; p < out_h * out_w; ++p) out[(n * F + f) * out_h * out_w + p] = b.data()[f];
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t xx = 0; xx < W; ++xx)
                    for (std::size_t f = 0; f < F; ++f)
                        for (std::size_t i = 0; i < kh; ++i)
                            for (std::size_t j = 0; j < kw; ++j) {
                                const long oy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                                const long ox = static_cast<long>(xx * stride + j) - static_cast<long>(pad);
                                if (oy < 0 || ox < 0 || oy >= static_cast<long>(out_h) ||
                                    ox >= static_cast<long>(out_w))
                                    continue;
                                out[((n * F + f) * out_h + oy) * out_w + ox] +=
                                    xd[((n * C + c) * H + y) * W + xx] * kd[((c * F + f) * kh + i) * kw + j];
                            }
    return out;
}

inline double inner(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Mean of squared elementwise differences.
inline double mean_sq_diff(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

}  // namespace rmgan::test
