#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::nn {

enum class Owner { generator, discriminator, mi_head, augmenter };

std::string_view to_string(Owner owner);

// Determines the initializer: weights are Gaussian, biases and shifts zero,
// scales one.
enum class ParamKind { weight, bias, scale, shift };

struct Parameter {
    std::string name;
    ad::Tensor value;
    ParamKind kind;
    bool trainable = true;
};

/// Named parameters of one network part, in registration order, plus the
/// non-trainable buffers (batch-norm running statistics) that travel with
/// them in checkpoints.
class ParamSet {
public:
    explicit ParamSet(Owner owner) : owner_(owner) {}

    Owner owner() const { return owner_; }

    // Registers a zero-filled trainable tensor. Names must be unique.
    ad::Tensor add(std::string name, ad::Shape shape, ParamKind kind);
    void add_buffer(std::string name, ad::Tensor tensor);

    const std::vector<Parameter>& params() const { return params_; }
    std::vector<Parameter>& params() { return params_; }
    const std::vector<std::pair<std::string, ad::Tensor>>& buffers() const { return buffers_; }

    const Parameter* find(std::string_view name) const;
    void set_trainable(std::string_view name, bool trainable);

    std::size_t scalar_count() const;
    void zero_grad() const;
    void drop_grad() const;

    // Copies values (and buffers) from another set with identical layout.
    void copy_values_from(const ParamSet& other);

private:
    void check_unique(const std::string& name) const;

    Owner owner_;
    std::vector<Parameter> params_;
    std::vector<std::pair<std::string, ad::Tensor>> buffers_;
};

}  // namespace rmgan::nn
