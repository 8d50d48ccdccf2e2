#include "rmgan/autodiff/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "rmgan/common/error.hpp"

namespace rmgan::ad {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

void check_dims(const Shape& shape) {
    for (std::size_t d : shape) {
        if (d == 0) {
            throw Error(ErrorCode::shape_mismatch, "zero-sized dimension in " + shape_to_string(shape));
        }
    }
}

}  // namespace

Tensor::Tensor() : impl_(std::make_shared<Impl>()) {
    impl_->shape = {};
    impl_->data.assign(1, 0.0);
}

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<Impl>()) {
    check_dims(shape);
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<Impl>()) {
    check_dims(shape);
    if (shape_numel(shape) != data.size()) {
        throw Error(ErrorCode::shape_mismatch, "shape " + shape_to_string(shape) + " holds " +
                                                   std::to_string(shape_numel(shape)) + " values, got " +
                                                   std::to_string(data.size()));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

double Tensor::item() const {
    if (numel() != 1) {
        throw Error(ErrorCode::shape_mismatch, "item() on tensor of shape " + shape_to_string(shape()));
    }
    return impl_->data[0];
}

std::span<double> Tensor::grad_buffer() const {
    if (impl_->grad.empty()) {
        impl_->grad.assign(impl_->data.size(), 0.0);
    }
    return impl_->grad;
}

void Tensor::zero_grad() const {
    if (!impl_->grad.empty()) {
        std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != numel()) {
        throw Error(ErrorCode::shape_mismatch,
                    "cannot view " + shape_to_string(this->shape()) + " as " + shape_to_string(shape));
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

}  // namespace rmgan::ad
