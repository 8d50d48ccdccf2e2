#include <cmath>
#include <memory>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"

namespace rmgan::ad {

Tensor batchnorm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps, BnMode mode,
                 RunningStats* stats, double momentum) {
    if (input.rank() != 2 && input.rank() != 4) {
        throw Error(ErrorCode::shape_mismatch, "batchnorm expects [N,C] or [N,C,H,W], got " +
                                                   shape_to_string(input.shape()));
    }
    const std::size_t N = input.dim(0);
    const std::size_t C = input.dim(1);
    const std::size_t plane = input.rank() == 4 ? input.dim(2) * input.dim(3) : 1;
    const std::size_t count = N * plane;
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
        throw Error(ErrorCode::shape_mismatch, "batchnorm: gamma/beta must be [" + std::to_string(C) +
                                                   "], got " + shape_to_string(gamma.shape()) + " and " +
                                                   shape_to_string(beta.shape()));
    }
    if (mode == BnMode::eval && stats == nullptr) {
        throw Error(ErrorCode::invalid_argument, "batchnorm eval mode needs running statistics");
    }
    if (mode == BnMode::train && count < 2) {
        throw Error(ErrorCode::degenerate_batch, "batchnorm train mode needs N*H*W >= 2, got " +
                                                     std::to_string(count));
    }

    const auto x = input.data();
    const auto gd = gamma.data();
    const auto bd = beta.data();
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(C);
    std::vector<double> out(x.size());

    for (std::size_t c = 0; c < C; ++c) {
        double mu = 0.0;
        double var = 0.0;
        if (mode == BnMode::train) {
            for (std::size_t n = 0; n < N; ++n) {
                const double* src = x.data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    mu += src[i];
                }
            }
            mu /= static_cast<double>(count);
            for (std::size_t n = 0; n < N; ++n) {
                const double* src = x.data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = src[i] - mu;
                    var += d * d;
                }
            }
            var /= static_cast<double>(count);
            if (stats != nullptr) {
                auto rm = stats->mean.mutable_data();
                auto rv = stats->var.mutable_data();
                rm[c] = momentum * rm[c] + (1.0 - momentum) * mu;
                rv[c] = momentum * rv[c] + (1.0 - momentum) * var;
            }
        } else {
            mu = stats->mean.data()[c];
            var = stats->var.data()[c];
        }
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[c] = is;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double h = (x[base + i] - mu) * is;
                (*xhat)[base + i] = h;
                out[base + i] = gd[c] * h + bd[c];
            }
        }
    }

    const bool tracked = should_record({&input, &gamma, &beta});
    Tensor y(input.shape(), std::move(out));
    y.set_requires_grad(tracked);
    if (tracked) {
        Tape::active()->record("batchnorm", y, [input, gamma, beta, y, xhat, inv_std, mode, N, C, plane]() mutable {
            const auto gy = y.grad();
            const auto gd = gamma.data();
            const double m = static_cast<double>(N * plane);
            for (std::size_t c = 0; c < C; ++c) {
                double sum_gy = 0.0;
                double sum_gy_xhat = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    const std::size_t base = (n * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_gy += gy[base + i];
                        sum_gy_xhat += gy[base + i] * (*xhat)[base + i];
                    }
                }
                if (gamma.requires_grad()) {
                    gamma.grad_buffer()[c] += sum_gy_xhat;
                }
                if (beta.requires_grad()) {
                    beta.grad_buffer()[c] += sum_gy;
                }
                if (!input.requires_grad()) {
                    continue;
                }
                auto gx = input.grad_buffer();
                const double k = gd[c] * (*inv_std)[c];
                for (std::size_t n = 0; n < N; ++n) {
                    const std::size_t base = (n * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        if (mode == BnMode::train) {
                            gx[base + i] +=
                                k * (gy[base + i] - sum_gy / m - (*xhat)[base + i] * sum_gy_xhat / m);
                        } else {
                            gx[base + i] += k * gy[base + i];
                        }
                    }
                }
            }
        });
    }
    return y;
}

}  // namespace rmgan::ad
