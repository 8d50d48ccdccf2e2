#include "rmgan/corpus/corrupt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rmgan/common/error.hpp"
#include "rmgan/common/rng.hpp"

namespace rmgan::corpus {

namespace {

std::pair<std::size_t, std::size_t> hw(const ad::Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw Error(ErrorCode::shape_mismatch, "expected a [1,H,W] image, got " + ad::shape_to_string(image.shape()));
    }
    return {image.dim(1), image.dim(2)};
}

// Maps output pixel coordinates to source coordinates.
struct Homography {
    Eigen::Matrix3d m;

    std::pair<double, double> apply(double x, double y) const {
        const Eigen::Vector3d p = m * Eigen::Vector3d(x, y, 1.0);
        return {p.x() / p.z(), p.y() / p.z()};
    }

    static Homography from_corners(const std::array<std::pair<double, double>, 4>& from,
                                   const std::array<std::pair<double, double>, 4>& to) {
        Eigen::Matrix<double, 8, 8> a;
        Eigen::Matrix<double, 8, 1> b;
        for (int i = 0; i < 4; ++i) {
            const auto [x, y] = from[i];
            const auto [u, v] = to[i];
            a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
            a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
            b(2 * i) = u;
            b(2 * i + 1) = v;
        }
        const Eigen::Matrix<double, 8, 1> h = a.partialPivLu().solve(b);
        Homography out;
        out.m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
        return out;
    }
};

ad::Tensor warp(const ad::Tensor& image, double strength, Rng& rng) {
    const auto [h, w] = hw(image);
    const double W = static_cast<double>(w), H = static_cast<double>(h);
    const std::array<std::pair<double, double>, 4> frame = {{{0, 0}, {W, 0}, {W, H}, {0, H}}};
    auto jittered = frame;
    for (auto& [x, y] : jittered) {
        x += rng.uniform(-1.0, 1.0) * strength * W / 4.0;
        y += rng.uniform(-1.0, 1.0) * strength * H / 4.0;
    }
    const Homography hom = Homography::from_corners(frame, jittered);
    const auto d = image.data();
    std::vector<double> out(w * h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            auto [sx, sy] = hom.apply(x + 0.5, y + 0.5);
            sx = std::clamp(sx - 0.5, 0.0, W - 1.0);
            sy = std::clamp(sy - 0.5, 0.0, H - 1.0);
            const std::size_t x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
            const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double tx = sx - x0, ty = sy - y0;
            const double top = d[y0 * w + x0] * (1 - tx) + d[y0 * w + x1] * tx;
            const double bottom = d[y1 * w + x0] * (1 - tx) + d[y1 * w + x1] * tx;
            out[y * w + x] = top * (1 - ty) + bottom * ty;
        }
    }
    return ad::Tensor(image.shape(), std::move(out));
}

}  // namespace

void CorruptionParams::validate() const {
    if (!(blur_sigma >= 0.0) || !(noise_sigma >= 0.0) || !(perspective_strength >= 0.0 && perspective_strength <= 0.3) ||
        !std::isfinite(blur_sigma) || !std::isfinite(noise_sigma)) {
        throw Error(ErrorCode::invalid_argument,
                    "corruption parameters out of range (blur " + std::to_string(blur_sigma) + ", noise " +
                        std::to_string(noise_sigma) + ", perspective " + std::to_string(perspective_strength) + ")");
    }
}

ad::Tensor gaussian_blur(const ad::Tensor& image, double sigma) {
    const auto [h, w] = hw(image);
    if (sigma == 0.0) {
        return image.detach();
    }
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double norm = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        norm += k[i + r];
    }
    for (double& v : k) {
        v /= norm;
    }
    const auto d = image.data();
    std::vector<double> tmp(w * h, 0.0), out(w * h, 0.0);
    const long W = static_cast<long>(w), H = static_cast<long>(h);
    for (long y = 0; y < H; ++y) {
        for (long x = 0; x < W; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) {
                const long xx = x + i;
                if (xx >= 0 && xx < W) {
                    s += k[i + r] * d[y * W + xx];
                }
            }
            tmp[y * W + x] = s;
        }
    }
    for (long y = 0; y < H; ++y) {
        for (long x = 0; x < W; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) {
                const long yy = y + i;
                if (yy >= 0 && yy < H) {
                    s += k[i + r] * tmp[yy * W + x];
                }
            }
            out[y * W + x] = s;
        }
    }
    return ad::Tensor(image.shape(), std::move(out));
}

ad::Tensor corrupt(const ad::Tensor& clean, const CorruptionParams& params, std::uint64_t seed) {
    params.validate();
    hw(clean);
    ad::Tensor img = clean.detach();
    if (params.blur_sigma > 0.0) {
        img = gaussian_blur(img, params.blur_sigma);
    }
    if (params.perspective_strength > 0.0) {
        Rng rng(derive_seed(seed, {0x77617270}));
        img = warp(img, params.perspective_strength, rng);
    }
    if (params.noise_sigma > 0.0) {
        Rng rng(derive_seed(seed, {0x6e6f6973}));
        for (double& v : img.mutable_data()) {
            v += rng.normal(0.0, params.noise_sigma);
        }
    }
    if (!params.is_identity()) {
        for (double& v : img.mutable_data()) {
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

}  // namespace rmgan::corpus
