// Convolution, transposed convolution and affine maps, lowered to dense
// matrix products over im2col patch matrices.

#include <Eigen/Core>

#include <memory>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"

namespace rmgan::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// Products run on copies in Eigen-owned storage. The vectorized kernels peel
// leading elements by address, so multiplying mapped buffers directly would
// round differently from one allocation to the next.
template <class A, class B>
RowMatrix product(const A& a, const B& b) {
    const RowMatrix lhs = a;
    const RowMatrix rhs = b;
    RowMatrix out(lhs.rows(), rhs.cols());
    out.noalias() = lhs * rhs;
    return out;
}

double sum_row(const ConstMatMap& m, std::size_t row) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        acc += m(static_cast<Eigen::Index>(row), j);
    }
    return acc;
}

struct Geometry {
    std::size_t batch;
    std::size_t channels;  // channels of the image side
    std::size_t height;    // image side
    std::size_t width;
    std::size_t kh;
    std::size_t kw;
    std::size_t stride;
    std::size_t pad;
    std::size_t out_h;  // patch grid
    std::size_t out_w;

    std::size_t rows() const { return channels * kh * kw; }
    std::size_t cols() const { return batch * out_h * out_w; }
};

// col[(c*kh + i)*kw + j][n*P + oy*out_w + ox] = image[n][c][oy*s - p + i][ox*s - p + j]
void im2col(const Geometry& g, const double* image, double* col) {
    const std::size_t P = g.out_h * g.out_w;
    const std::size_t ncols = g.cols();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                double* row = col + ((c * g.kh + i) * g.kw + j) * ncols;
                for (std::size_t n = 0; n < g.batch; ++n) {
                    const double* plane = image + (n * g.channels + c) * g.height * g.width;
                    double* dst = row + n * P;
                    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                                 static_cast<std::ptrdiff_t>(g.pad);
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) {
                            std::fill_n(dst + oy * g.out_w, g.out_w, 0.0);
                            continue;
                        }
                        const double* src = plane + static_cast<std::size_t>(y) * g.width;
                        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                                     static_cast<std::ptrdiff_t>(g.pad);
                            dst[oy * g.out_w + ox] =
                                (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) ? 0.0 : src[x];
                        }
                    }
                }
            }
        }
    }
}

// Scatter-add adjoint of im2col.
void col2im(const Geometry& g, const double* col, double* image) {
    const std::size_t P = g.out_h * g.out_w;
    const std::size_t ncols = g.cols();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                const double* row = col + ((c * g.kh + i) * g.kw + j) * ncols;
                for (std::size_t n = 0; n < g.batch; ++n) {
                    double* plane = image + (n * g.channels + c) * g.height * g.width;
                    const double* src = row + n * P;
                    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                                 static_cast<std::ptrdiff_t>(g.pad);
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) {
                            continue;
                        }
                        double* dst = plane + static_cast<std::size_t>(y) * g.width;
                        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                                     static_cast<std::ptrdiff_t>(g.pad);
                            if (x >= 0 && x < static_cast<std::ptrdiff_t>(g.width)) {
                                dst[x] += src[oy * g.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

// [N, F, P] <-> [F, N*P]
void batch_major_to_channel_major(const double* src, double* dst, std::size_t n, std::size_t f,
                                  std::size_t p) {
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < f; ++c) {
            std::copy_n(src + (b * f + c) * p, p, dst + c * n * p + b * p);
        }
    }
}

void channel_major_to_batch_major(const double* src, double* dst, std::size_t n, std::size_t f,
                                  std::size_t p) {
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < f; ++c) {
            std::copy_n(src + c * n * p + b * p, p, dst + (b * f + c) * p);
        }
    }
}

void require_rank(const char* op, const char* what, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        throw Error(ErrorCode::shape_mismatch, std::string(op) + ": " + what + " must have rank " +
                                                   std::to_string(rank) + ", got " +
                                                   shape_to_string(t.shape()));
    }
}

void require_geometry_args(const char* op, int stride, int pad) {
    if (stride <= 0 || pad < 0) {
        throw Error(ErrorCode::invalid_argument, std::string(op) + ": stride must be positive and pad "
                                                     "non-negative (stride=" + std::to_string(stride) +
                                                     ", pad=" + std::to_string(pad) + ")");
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
    require_rank("conv2d", "input", input, 4);
    require_rank("conv2d", "kernel", kernel, 4);
    require_rank("conv2d", "bias", bias, 1);
    require_geometry_args("conv2d", stride, pad);
    const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::size_t F = kernel.dim(0), KC = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    if (KC != C) {
        throw Error(ErrorCode::shape_mismatch, "conv2d: input has " + std::to_string(C) +
                                                   " channels (dim 1 of " + shape_to_string(input.shape()) +
                                                   ") but kernel expects " + std::to_string(KC) +
                                                   " (dim 1 of " + shape_to_string(kernel.shape()) + ")");
    }
    if (bias.dim(0) != F) {
        throw Error(ErrorCode::shape_mismatch, "conv2d: bias has " + std::to_string(bias.dim(0)) +
                                                   " entries, kernel has " + std::to_string(F) + " filters");
    }
    const auto s = static_cast<std::size_t>(stride);
    const auto p = static_cast<std::size_t>(pad);
    // Trailing rows/columns that do not fill a whole stride are dropped.
    if (H + 2 * p < kh || W + 2 * p < kw) {
        throw Error(ErrorCode::non_integral_output, "conv2d: kernel " + shape_to_string(kernel.shape()) +
                                                        " does not fit the padded input " +
                                                        shape_to_string(input.shape()) + " (pad " +
                                                        std::to_string(p) + ")");
    }
    const Geometry g{N, C, H, W, kh, kw, s, p, (H + 2 * p - kh) / s + 1, (W + 2 * p - kw) / s + 1};
    const std::size_t P = g.out_h * g.out_w;

    auto col = std::make_shared<std::vector<double>>(g.rows() * g.cols());
    im2col(g, input.data().data(), col->data());

    std::vector<double> out_cm(F * g.cols());
    {
        ConstMatMap wm(kernel.data().data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(g.rows()));
        ConstMatMap cm(col->data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
        MatMap om(out_cm.data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(g.cols()));
        om = product(wm, cm);
        const auto bd = bias.data();
        for (std::size_t f = 0; f < F; ++f) {
            om.row(static_cast<Eigen::Index>(f)).array() += bd[f];
        }
    }
    std::vector<double> out(N * F * P);
    channel_major_to_batch_major(out_cm.data(), out.data(), N, F, P);

    const bool tracked = should_record({&input, &kernel, &bias});
    Tensor y(Shape{N, F, g.out_h, g.out_w}, std::move(out));
    y.set_requires_grad(tracked);
    if (tracked) {
        Tape::active()->record("conv2d", y, [input, kernel, bias, y, g, col, F]() mutable {
            const std::size_t P = g.out_h * g.out_w;
            std::vector<double> gy_cm(F * g.cols());
            batch_major_to_channel_major(y.grad().data(), gy_cm.data(), g.batch, F, P);
            ConstMatMap gym(gy_cm.data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(g.cols()));
            if (kernel.requires_grad()) {
                ConstMatMap cm(col->data(), static_cast<Eigen::Index>(g.rows()),
                               static_cast<Eigen::Index>(g.cols()));
                MatMap gk(kernel.grad_buffer().data(), static_cast<Eigen::Index>(F),
                          static_cast<Eigen::Index>(g.rows()));
                gk += product(gym, cm.transpose());
            }
            if (bias.requires_grad()) {
                auto gb = bias.grad_buffer();
                for (std::size_t f = 0; f < F; ++f) {
                    gb[f] += sum_row(gym, f);
                }
            }
            if (input.requires_grad()) {
                std::vector<double> gcol(g.rows() * g.cols());
                ConstMatMap wm(kernel.data().data(), static_cast<Eigen::Index>(F),
                               static_cast<Eigen::Index>(g.rows()));
                MatMap gc(gcol.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
                gc = product(wm.transpose(), gym);
                col2im(g, gcol.data(), input.grad_buffer().data());
            }
        });
    }
    return y;
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
    require_rank("conv2d_transpose", "input", input, 4);
    require_rank("conv2d_transpose", "kernel", kernel, 4);
    require_rank("conv2d_transpose", "bias", bias, 1);
    require_geometry_args("conv2d_transpose", stride, pad);
    const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::size_t KC = kernel.dim(0), F = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    if (KC != C) {
        throw Error(ErrorCode::shape_mismatch, "conv2d_transpose: input has " + std::to_string(C) +
                                                   " channels (dim 1 of " + shape_to_string(input.shape()) +
                                                   ") but kernel expects " + std::to_string(KC) +
                                                   " (dim 0 of " + shape_to_string(kernel.shape()) + ")");
    }
    if (bias.dim(0) != F) {
        throw Error(ErrorCode::shape_mismatch, "conv2d_transpose: bias has " + std::to_string(bias.dim(0)) +
                                                   " entries, kernel produces " + std::to_string(F) +
                                                   " channels");
    }
    const auto s = static_cast<std::size_t>(stride);
    const auto p = static_cast<std::size_t>(pad);
    if ((H - 1) * s + kh <= 2 * p || (W - 1) * s + kw <= 2 * p) {
        throw Error(ErrorCode::non_integral_output,
                    "conv2d_transpose: output size (H-1)*stride - 2*pad + kh is not positive");
    }
    const std::size_t Ho = (H - 1) * s + kh - 2 * p;
    const std::size_t Wo = (W - 1) * s + kw - 2 * p;
    // Geometry of the adjoint convolution: the output image is the "image"
    // side, the input grid is the patch grid.
    const Geometry g{N, F, Ho, Wo, kh, kw, s, p, H, W};
    const std::size_t P = H * W;

    std::vector<double> in_cm(C * N * P);
    batch_major_to_channel_major(input.data().data(), in_cm.data(), N, C, P);
    auto in_cm_shared = std::make_shared<std::vector<double>>(std::move(in_cm));

    std::vector<double> col(g.rows() * g.cols());
    {
        ConstMatMap km(kernel.data().data(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(g.rows()));
        ConstMatMap im(in_cm_shared->data(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(g.cols()));
        MatMap cm(col.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
        cm = product(km.transpose(), im);
    }
    std::vector<double> out(N * F * Ho * Wo, 0.0);
    col2im(g, col.data(), out.data());
    const auto bd = bias.data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t f = 0; f < F; ++f) {
            double* plane = out.data() + (n * F + f) * Ho * Wo;
            for (std::size_t i = 0; i < Ho * Wo; ++i) {
                plane[i] += bd[f];
            }
        }
    }

    const bool tracked = should_record({&input, &kernel, &bias});
    Tensor y(Shape{N, F, Ho, Wo}, std::move(out));
    y.set_requires_grad(tracked);
    if (tracked) {
        Tape::active()->record("conv2d_transpose", y, [input, kernel, bias, y, g, in_cm_shared, C]() mutable {
            const std::size_t P = g.out_h * g.out_w;
            std::vector<double> gcol(g.rows() * g.cols());
            im2col(g, y.grad().data(), gcol.data());
            ConstMatMap gc(gcol.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
            if (kernel.requires_grad()) {
                ConstMatMap im(in_cm_shared->data(), static_cast<Eigen::Index>(C),
                               static_cast<Eigen::Index>(g.cols()));
                MatMap gk(kernel.grad_buffer().data(), static_cast<Eigen::Index>(C),
                          static_cast<Eigen::Index>(g.rows()));
                gk += product(im, gc.transpose());
            }
            if (bias.requires_grad()) {
                auto gb = bias.grad_buffer();
                const auto gy = y.grad();
                const std::size_t plane = g.height * g.width;
                for (std::size_t n = 0; n < g.batch; ++n) {
                    for (std::size_t f = 0; f < g.channels; ++f) {
                        double acc = 0.0;
                        const double* src = gy.data() + (n * g.channels + f) * plane;
                        for (std::size_t i = 0; i < plane; ++i) {
                            acc += src[i];
                        }
                        gb[f] += acc;
                    }
                }
            }
            if (input.requires_grad()) {
                ConstMatMap km(kernel.data().data(), static_cast<Eigen::Index>(C),
                               static_cast<Eigen::Index>(g.rows()));
                std::vector<double> gin_cm(C * g.cols());
                MatMap gi(gin_cm.data(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(g.cols()));
                gi = product(km, gc);
                std::vector<double> gin(gin_cm.size());
                channel_major_to_batch_major(gin_cm.data(), gin.data(), g.batch, C, P);
                auto gx = input.grad_buffer();
                for (std::size_t i = 0; i < gx.size(); ++i) {
                    gx[i] += gin[i];
                }
            }
        });
    }
    return y;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank("linear", "input", x, 2);
    require_rank("linear", "weight", weight, 2);
    require_rank("linear", "bias", bias, 1);
    const std::size_t N = x.dim(0), In = x.dim(1), Out = weight.dim(0);
    if (weight.dim(1) != In || bias.dim(0) != Out) {
        throw Error(ErrorCode::shape_mismatch, "linear: input " + shape_to_string(x.shape()) + ", weight " +
                                                   shape_to_string(weight.shape()) + ", bias " +
                                                   shape_to_string(bias.shape()));
    }
    std::vector<double> out(N * Out);
    {
        ConstMatMap xm(x.data().data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(In));
        ConstMatMap wm(weight.data().data(), static_cast<Eigen::Index>(Out), static_cast<Eigen::Index>(In));
        MatMap om(out.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(Out));
        om = product(xm, wm.transpose());
        const auto bd = bias.data();
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t o = 0; o < Out; ++o) {
                out[n * Out + o] += bd[o];
            }
        }
    }
    const bool tracked = should_record({&x, &weight, &bias});
    Tensor y(Shape{N, Out}, std::move(out));
    y.set_requires_grad(tracked);
    if (tracked) {
        Tape::active()->record("linear", y, [x, weight, bias, y, N, In, Out]() mutable {
            ConstMatMap gy(y.grad().data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(Out));
            if (weight.requires_grad()) {
                ConstMatMap xm(x.data().data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(In));
                MatMap gw(weight.grad_buffer().data(), static_cast<Eigen::Index>(Out),
                          static_cast<Eigen::Index>(In));
                gw += product(gy.transpose(), xm);
            }
            if (bias.requires_grad()) {
                auto gb = bias.grad_buffer();
                for (std::size_t n = 0; n < N; ++n) {
                    for (std::size_t o = 0; o < Out; ++o) {
                        gb[o] += gy(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(o));
                    }
                }
            }
            if (x.requires_grad()) {
                ConstMatMap wm(weight.data().data(), static_cast<Eigen::Index>(Out),
                               static_cast<Eigen::Index>(In));
                MatMap gx(x.grad_buffer().data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(In));
                gx += product(gy, wm);
            }
        });
    }
    return y;
}

}  // namespace rmgan::ad
