#include "rmgan/models/arch.hpp"

#include <string>

#include "rmgan/common/error.hpp"

namespace rmgan::models {

namespace {

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; }
std::size_t bn_params(std::size_t c) { return 2 * c; }
std::size_t linear_params(std::size_t in, std::size_t out) { return out * in + out; }

void check_image_size(std::size_t size, const char* what) {
    if (size < 8 || size % 8 != 0) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + ": image size must be a positive multiple of 8, got " + std::to_string(size));
    }
}

// Three stride-2 stages must halve the resolution exactly at every step.
void check_halving(std::size_t kernel, int stride, int pad, const char* what) {
    if (stride != 2 || static_cast<int>(kernel) != 2 * pad + 2) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + ": stages must halve resolution (stride 2, kernel = 2*pad + 2)");
    }
}

}  // namespace

void GeneratorArch::validate() const {
    check_image_size(image_size, "generator");
    check_halving(kernel, stride, pad, "generator");
}

std::size_t GeneratorArch::parameter_count() const {
    const auto [w0, w1, w2] = widths;
    return conv_params(channels, w0, kernel) + bn_params(w0) + conv_params(w0, w1, kernel) + bn_params(w1) +
           conv_params(w1, w2, kernel) + bn_params(w2) + conv_params(w2, w1, kernel) + bn_params(w1) +
           conv_params(w1, w0, kernel) + bn_params(w0) + conv_params(w0, channels, kernel);
}

void DiscriminatorArch::validate() const {
    check_image_size(image_size, "discriminator");
    check_halving(kernel, stride, pad, "discriminator");
}

std::size_t DiscriminatorArch::feature_count() const {
    const std::size_t s = image_size / 8;
    return widths[2] * s * s;
}

std::size_t DiscriminatorArch::parameter_count() const {
    const auto [w0, w1, w2] = widths;
    return conv_params(channels, w0, kernel) + conv_params(w0, w1, kernel) + bn_params(w1) +
           conv_params(w1, w2, kernel) + bn_params(w2) + linear_params(feature_count(), 1) +
           linear_params(feature_count(), num_classes);
}

std::size_t DiscriminatorArch::mi_head_parameter_count() const {
    return linear_params(feature_count(), code_dim);
}

void AugmenterArch::validate() const {
    check_image_size(image_size, "augmenter");
    check_halving(kernel, stride, pad, "augmenter");
}

std::size_t AugmenterArch::parameter_count() const {
    const auto [w0, w1, w2] = widths;
    const std::size_t s = seed_size();
    return linear_params(z_dim + code_dim, w0 * s * s) + bn_params(w0) + conv_params(w0, w1, kernel) +
           bn_params(w1) + conv_params(w1, w2, kernel) + bn_params(w2) + conv_params(w2, channels, kernel);
}

GeneratorArch tiny_generator_arch() {
    GeneratorArch a;
    a.image_size = 16;
    a.widths = {3, 4, 5};
    return a;
}

DiscriminatorArch tiny_discriminator_arch() {
    DiscriminatorArch a;
    a.image_size = 16;
    a.widths = {3, 4, 5};
    return a;
}

AugmenterArch tiny_augmenter_arch() {
    AugmenterArch a;
    a.image_size = 16;
    a.z_dim = 6;
    a.widths = {5, 4, 3};
    return a;
}

}  // namespace rmgan::models
