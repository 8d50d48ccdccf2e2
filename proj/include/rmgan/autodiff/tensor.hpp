#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rmgan::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Shaped row-major array of doubles with an optional gradient buffer.
///
/// Tensor is a cheap handle: copies share storage, so a value recorded on the
/// tape and the handle the caller holds observe the same gradient. Values are
/// not modified after creation except through mutable_data(), which is reserved
/// for parameters (optimizer updates, initialization) and for filling inputs.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t numel() const { return impl_->data.size(); }

    std::span<const double> data() const { return impl_->data; }
    std::span<double> mutable_data() { return impl_->data; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool value) { impl_->requires_grad = value; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const { return impl_->grad; }
    // Allocates a zeroed gradient buffer on first use.
    // Gradient storage is shared mutable state of the handle, hence const.
    std::span<double> grad_buffer() const;
    void zero_grad() const;
    void drop_grad() const { impl_->grad.clear(); impl_->grad.shrink_to_fit(); }

    // Same values, fresh storage, no gradient tracking.
    Tensor detach() const;

    // Untracked copy with another shape of equal element count. Use
    // ad::reshape inside a recorded computation.
    Tensor reshaped(Shape shape) const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    std::shared_ptr<Impl> impl_;
};

}  // namespace rmgan::ad
