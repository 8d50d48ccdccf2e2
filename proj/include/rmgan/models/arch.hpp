#pragma once

#include <array>
#include <cstddef>

namespace rmgan::models {

inline constexpr std::size_t kNumClasses = 10;

/// Fully convolutional autoencoder: three stride-2 encoder stages
/// (conv, batch norm, leaky relu) mirrored by three transposed-conv decoder
/// stages (batch norm and relu except the last, which ends in a sigmoid).
struct GeneratorArch {
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::array<std::size_t, 3> widths{16, 32, 64};
    std::size_t kernel = 4;
    int stride = 2;
    int pad = 1;
    double leaky_slope = 0.2;

    void validate() const;
    std::size_t parameter_count() const;
};

/// Shared three-stage conv trunk (no batch norm on the first stage) with
/// three affine heads: real/fake probability, class logits, and latent-code
/// logits for the mutual-information estimate.
struct DiscriminatorArch {
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::array<std::size_t, 3> widths{16, 32, 64};
    std::size_t kernel = 4;
    int stride = 2;
    int pad = 1;
    double leaky_slope = 0.2;
    std::size_t num_classes = kNumClasses;
    std::size_t code_dim = kNumClasses;

    void validate() const;
    std::size_t feature_count() const;
    // Trunk plus the real/fake and class heads.
    std::size_t parameter_count() const;
    std::size_t mi_head_parameter_count() const;
};

/// Class-conditional sampler: (z, one-hot code) is projected to a seed map
/// at 1/8 resolution and upsampled by three transposed-conv stages.
struct AugmenterArch {
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::size_t z_dim = 64;
    std::size_t code_dim = kNumClasses;
    std::array<std::size_t, 3> widths{64, 32, 16};
    std::size_t kernel = 4;
    int stride = 2;
    int pad = 1;

    void validate() const;
    std::size_t seed_size() const { return image_size / 8; }
    std::size_t parameter_count() const;
};

/// Reduced-width descriptors on 16x16 inputs, small enough that every
/// parameter can be finite-differenced.
GeneratorArch tiny_generator_arch();
DiscriminatorArch tiny_discriminator_arch();
AugmenterArch tiny_augmenter_arch();

}  // namespace rmgan::models
