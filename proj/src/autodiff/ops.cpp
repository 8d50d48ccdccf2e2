#include "rmgan/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>

#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/error.hpp"

namespace rmgan::ad {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw Error(ErrorCode::shape_mismatch, std::string(op) + ": " + shape_to_string(a.shape()) +
                                                   " vs " + shape_to_string(b.shape()));
    }
}

Tensor make_output(Shape shape, std::vector<double> data, bool tracked) {
    Tensor out(std::move(shape), std::move(data));
    out.set_requires_grad(tracked);
    return out;
}

// Shared shape for y = f(x) ops whose local derivative depends on x and y.
template <typename Forward, typename Derivative>
Tensor unary(const char* name, const Tensor& x, Forward f, Derivative df) {
    const auto xd = x.data();
    std::vector<double> out(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        out[i] = f(xd[i]);
    }
    const bool tracked = should_record({&x});
    Tensor y = make_output(x.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record(name, y, [x, y, df]() mutable {
            const auto gy = y.grad();
            const auto xd = x.data();
            const auto yd = y.data();
            auto gx = x.grad_buffer();
            for (std::size_t i = 0; i < gx.size(); ++i) {
                gx[i] += gy[i] * df(xd[i], yd[i]);
            }
        });
    }
    return y;
}

thread_local KinkMonitor* g_monitor = nullptr;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.numel());
    const auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ad[i] + bd[i];
    }
    const bool tracked = should_record({&a, &b});
    Tensor y = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record("add", y, [a, b, y]() mutable {
            const auto gy = y.grad();
            for (const Tensor* t : {&a, &b}) {
                if (t->requires_grad()) {
                    auto g = t->grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        g[i] += gy[i];
                    }
                }
            }
        });
    }
    return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    std::vector<double> out(a.numel());
    const auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ad[i] - bd[i];
    }
    const bool tracked = should_record({&a, &b});
    Tensor y = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record("sub", y, [a, b, y]() mutable {
            const auto gy = y.grad();
            if (a.requires_grad()) {
                auto g = a.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += gy[i];
                }
            }
            if (b.requires_grad()) {
                auto g = b.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] -= gy[i];
                }
            }
        });
    }
    return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<double> out(a.numel());
    const auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ad[i] * bd[i];
    }
    const bool tracked = should_record({&a, &b});
    Tensor y = make_output(a.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record("mul", y, [a, b, y]() mutable {
            const auto gy = y.grad();
            if (a.requires_grad()) {
                auto g = a.grad_buffer();
                const auto bd = b.data();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += gy[i] * bd[i];
                }
            }
            if (b.requires_grad()) {
                auto g = b.grad_buffer();
                const auto ad = a.data();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += gy[i] * ad[i];
                }
            }
        });
    }
    return y;
}

Tensor scale(const Tensor& a, double factor) {
    return unary(
        "scale", a, [factor](double x) { return factor * x; },
        [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary(
        "add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& a) {
    return unary(
        "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor log(const Tensor& a) {
    for (double v : a.data()) {
        if (!(v > 0.0)) {
            throw Error(ErrorCode::non_finite, "log of non-positive value " + std::to_string(v));
        }
    }
    return unary(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) {
        total += v;
    }
    const bool tracked = should_record({&a});
    Tensor y = make_output(Shape{}, {total}, tracked);
    if (tracked) {
        Tape::active()->record("sum", y, [a, y]() mutable {
            const double gy = y.grad()[0];
            for (double& g : a.grad_buffer()) {
                g += gy;
            }
        });
    }
    return y;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw Error(ErrorCode::shape_mismatch,
                    "reshape " + shape_to_string(a.shape()) + " to " + shape_to_string(shape));
    }
    const bool tracked = should_record({&a});
    Tensor y = make_output(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), tracked);
    if (tracked) {
        Tape::active()->record("reshape", y, [a, y]() mutable {
            const auto gy = y.grad();
            auto g = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += gy[i];
            }
        });
    }
    return y;
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw Error(ErrorCode::invalid_argument, "concat_rows of nothing");
    }
    const Shape& first = parts.front().shape();
    if (first.empty()) {
        throw Error(ErrorCode::shape_mismatch, "concat_rows needs rank >= 1");
    }
    Shape out_shape = first;
    out_shape[0] = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
        if (p.rank() != first.size() || !std::equal(first.begin() + 1, first.end(), p.shape().begin() + 1)) {
            throw Error(ErrorCode::shape_mismatch, "concat_rows: " + shape_to_string(first) + " vs " +
                                                       shape_to_string(p.shape()));
        }
        out_shape[0] += p.dim(0);
        tracked = tracked || should_record({&p});
    }
    std::vector<double> out;
    out.reserve(shape_numel(out_shape));
    for (const Tensor& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
    }
    Tensor y = make_output(std::move(out_shape), std::move(out), tracked);
    if (tracked) {
        std::vector<Tensor> inputs(parts.begin(), parts.end());
        Tape::active()->record("concat_rows", y, [inputs, y]() mutable {
            const auto gy = y.grad();
            std::size_t offset = 0;
            for (Tensor& p : inputs) {
                if (p.requires_grad()) {
                    auto g = p.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        g[i] += gy[offset + i];
                    }
                }
                offset += p.numel();
            }
        });
    }
    return y;
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    if (a.rank() == 0 || rows.empty()) {
        throw Error(ErrorCode::shape_mismatch, "gather_rows needs rank >= 1 and at least one row");
    }
    const std::size_t stride = a.numel() / a.dim(0);
    Shape out_shape = a.shape();
    out_shape[0] = rows.size();
    std::vector<double> out(rows.size() * stride);
    const auto ad = a.data();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= a.dim(0)) {
            throw Error(ErrorCode::shape_mismatch, "gather_rows: row " + std::to_string(rows[r]) +
                                                       " of " + std::to_string(a.dim(0)));
        }
        std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>(rows[r] * stride), stride,
                    out.begin() + static_cast<std::ptrdiff_t>(r * stride));
    }
    const bool tracked = should_record({&a});
    Tensor y = make_output(std::move(out_shape), std::move(out), tracked);
    if (tracked) {
        std::vector<std::size_t> index(rows.begin(), rows.end());
        Tape::active()->record("gather_rows", y, [a, y, index, stride]() mutable {
            const auto gy = y.grad();
            auto g = a.grad_buffer();
            for (std::size_t r = 0; r < index.size(); ++r) {
                for (std::size_t k = 0; k < stride; ++k) {
                    g[index[r] * stride + k] += gy[r * stride + k];
                }
            }
        });
    }
    return y;
}

Tensor relu(const Tensor& x) {
    if (g_monitor != nullptr) {
        g_monitor->observe(x.data());
    }
    return unary(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    if (g_monitor != nullptr) {
        g_monitor->observe(x.data());
    }
    return unary(
        "leaky_relu", x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(
        "sigmoid", x,
        [](double v) {
            if (v >= 0.0) {
                return 1.0 / (1.0 + std::exp(-v));
            }
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

namespace {

struct AxisLayout {
    std::size_t outer;
    std::size_t extent;
    std::size_t inner;
};

AxisLayout axis_layout(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw Error(ErrorCode::invalid_argument, "axis " + std::to_string(axis) + " out of range for " +
                                                     shape_to_string(x.shape()));
    }
    AxisLayout layout{1, x.dim(axis), 1};
    for (std::size_t i = 0; i < axis; ++i) {
        layout.outer *= x.dim(i);
    }
    for (std::size_t i = axis + 1; i < x.rank(); ++i) {
        layout.inner *= x.dim(i);
    }
    return layout;
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
    const AxisLayout L = axis_layout(x, axis);
    const auto xd = x.data();
    std::vector<double> out(xd.size());
    for (std::size_t o = 0; o < L.outer; ++o) {
        for (std::size_t in = 0; in < L.inner; ++in) {
            const std::size_t base = o * L.extent * L.inner + in;
            double peak = xd[base];
            for (std::size_t k = 1; k < L.extent; ++k) {
                peak = std::max(peak, xd[base + k * L.inner]);
            }
            double total = 0.0;
            for (std::size_t k = 0; k < L.extent; ++k) {
                out[base + k * L.inner] = std::exp(xd[base + k * L.inner] - peak);
                total += out[base + k * L.inner];
            }
            for (std::size_t k = 0; k < L.extent; ++k) {
                out[base + k * L.inner] /= total;
            }
        }
    }
    const bool tracked = should_record({&x});
    Tensor y = make_output(x.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record("softmax", y, [x, y, L]() mutable {
            const auto gy = y.grad();
            const auto yd = y.data();
            auto gx = x.grad_buffer();
            for (std::size_t o = 0; o < L.outer; ++o) {
                for (std::size_t in = 0; in < L.inner; ++in) {
                    const std::size_t base = o * L.extent * L.inner + in;
                    double dot = 0.0;
                    for (std::size_t k = 0; k < L.extent; ++k) {
                        dot += gy[base + k * L.inner] * yd[base + k * L.inner];
                    }
                    for (std::size_t k = 0; k < L.extent; ++k) {
                        const std::size_t i = base + k * L.inner;
                        gx[i] += yd[i] * (gy[i] - dot);
                    }
                }
            }
        });
    }
    return y;
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
    const AxisLayout L = axis_layout(x, axis);
    const auto xd = x.data();
    std::vector<double> out(xd.size());
    for (std::size_t o = 0; o < L.outer; ++o) {
        for (std::size_t in = 0; in < L.inner; ++in) {
            const std::size_t base = o * L.extent * L.inner + in;
            double peak = xd[base];
            for (std::size_t k = 1; k < L.extent; ++k) {
                peak = std::max(peak, xd[base + k * L.inner]);
            }
            double total = 0.0;
            for (std::size_t k = 0; k < L.extent; ++k) {
                total += std::exp(xd[base + k * L.inner] - peak);
            }
            const double log_norm = peak + std::log(total);
            for (std::size_t k = 0; k < L.extent; ++k) {
                out[base + k * L.inner] = xd[base + k * L.inner] - log_norm;
            }
        }
    }
    const bool tracked = should_record({&x});
    Tensor y = make_output(x.shape(), std::move(out), tracked);
    if (tracked) {
        Tape::active()->record("log_softmax", y, [x, y, L]() mutable {
            const auto gy = y.grad();
            const auto yd = y.data();
            auto gx = x.grad_buffer();
            for (std::size_t o = 0; o < L.outer; ++o) {
                for (std::size_t in = 0; in < L.inner; ++in) {
                    const std::size_t base = o * L.extent * L.inner + in;
                    double total = 0.0;
                    for (std::size_t k = 0; k < L.extent; ++k) {
                        total += gy[base + k * L.inner];
                    }
                    for (std::size_t k = 0; k < L.extent; ++k) {
                        const std::size_t i = base + k * L.inner;
                        gx[i] += gy[i] - std::exp(yd[i]) * total;
                    }
                }
            }
        });
    }
    return y;
}

KinkMonitor::KinkMonitor() : previous_(g_monitor) { g_monitor = this; }

KinkMonitor::~KinkMonitor() { g_monitor = previous_; }

KinkMonitor* KinkMonitor::active() { return g_monitor; }

void KinkMonitor::observe(std::span<const double> values) {
    for (double v : values) {
        signs_.push_back(v > 0.0);
    }
}

}  // namespace rmgan::ad
