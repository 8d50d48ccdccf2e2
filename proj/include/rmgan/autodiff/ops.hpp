#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::ad {

// Elementwise arithmetic. Binary ops require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor square(const Tensor& a);
Tensor log(const Tensor& a);

// Reductions to a scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
// Joins tensors along axis 0; trailing dimensions must agree.
Tensor concat_rows(std::span<const Tensor> parts);
// Selects rows (entries along axis 0) in the given order.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

// x: [N, in], weight: [out, in], bias: [out] -> [N, out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Cross-correlation (no kernel flip).
// input [N,C,H,W], kernel [F,C,kh,kw], bias [F] -> [N,F,H',W'] with
// H' = floor((H + 2*pad - kh) / stride) + 1; the kernel must fit the padded
// input.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad);

// Adjoint of conv2d with the same geometry.
// input [N,C,H,W], kernel [C,F,kh,kw], bias [F] -> [N,F,H'',W''] with
// H'' = (H - 1) * stride - 2 * pad + kh.
Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
                        int pad);

enum class BnMode { train, eval };

struct RunningStats {
    Tensor mean;
    Tensor var;

    explicit RunningStats(std::size_t channels)
        : mean(Shape{channels}, 0.0), var(Shape{channels}, 1.0) {}
};

// Per-channel batch normalization over [N,C,H,W] (or [N,C]).
// Train mode normalizes with biased batch statistics and, when stats is
// given, folds them into the running averages:
//   running = momentum * running + (1 - momentum) * batch.
// Eval mode normalizes with the running statistics.
Tensor batchnorm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps, BnMode mode,
                 RunningStats* stats, double momentum = 0.9);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

/// Records the sign of every relu / leaky-relu input while alive on this
/// thread. Finite-difference checks use it to detect stencils that straddle a
/// kink, where central differences do not estimate the derivative.
class KinkMonitor {
public:
    KinkMonitor();
    KinkMonitor(const KinkMonitor&) = delete;
    KinkMonitor& operator=(const KinkMonitor&) = delete;
    ~KinkMonitor();

    const std::vector<bool>& signs() const { return signs_; }
    void reset() { signs_.clear(); }

    static KinkMonitor* active();
    void observe(std::span<const double> values);

private:
    KinkMonitor* previous_;
    std::vector<bool> signs_;
};

}  // namespace rmgan::ad
