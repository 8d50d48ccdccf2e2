#include "rmgan/nn/param_set.hpp"

#include <algorithm>

#include "rmgan/common/error.hpp"

namespace rmgan::nn {

std::string_view to_string(Owner owner) {
    switch (owner) {
        case Owner::generator: return "generator";
        case Owner::discriminator: return "discriminator";
        case Owner::mi_head: return "mi_head";
        case Owner::augmenter: return "augmenter";
    }
    return "unknown";
}

void ParamSet::check_unique(const std::string& name) const {
    const bool taken = std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.name == name; }) ||
                       std::any_of(buffers_.begin(), buffers_.end(), [&](const auto& b) { return b.first == name; });
    if (taken) {
        throw Error(ErrorCode::invalid_argument, "duplicate parameter name '" + name + "' in " +
                                                     std::string(to_string(owner_)));
    }
}

ad::Tensor ParamSet::add(std::string name, ad::Shape shape, ParamKind kind) {
    check_unique(name);
    ad::Tensor t(std::move(shape));
    t.set_requires_grad(true);
    params_.push_back(Parameter{std::move(name), t, kind, true});
    return t;
}

void ParamSet::add_buffer(std::string name, ad::Tensor tensor) {
    check_unique(name);
    buffers_.emplace_back(std::move(name), std::move(tensor));
}

const Parameter* ParamSet::find(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

void ParamSet::set_trainable(std::string_view name, bool trainable) {
    for (auto& p : params_) {
        if (p.name == name) {
            p.trainable = trainable;
            p.value.set_requires_grad(trainable);
            return;
        }
    }
    throw Error(ErrorCode::invalid_argument, "no parameter named '" + std::string(name) + "'");
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.value.numel();
    }
    return n;
}

void ParamSet::zero_grad() const {
    for (const auto& p : params_) {
        p.value.zero_grad();
    }
}

void ParamSet::drop_grad() const {
    for (const auto& p : params_) {
        p.value.drop_grad();
    }
}

void ParamSet::copy_values_from(const ParamSet& other) {
    if (other.params_.size() != params_.size() || other.buffers_.size() != buffers_.size()) {
        throw Error(ErrorCode::shape_mismatch, "parameter sets differ in layout");
    }
    auto copy = [](ad::Tensor& dst, const ad::Tensor& src, const std::string& name) {
        if (dst.shape() != src.shape()) {
            throw Error(ErrorCode::shape_mismatch, "parameter '" + name + "' has shape " +
                                                       ad::shape_to_string(dst.shape()) + ", source has " +
                                                       ad::shape_to_string(src.shape()));
        }
        std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
    };
    for (std::size_t i = 0; i < params_.size(); ++i) {
        copy(params_[i].value, other.params_[i].value, params_[i].name);
    }
    for (std::size_t i = 0; i < buffers_.size(); ++i) {
        copy(buffers_[i].second, other.buffers_[i].second, buffers_[i].first);
    }
}

}  // namespace rmgan::nn
