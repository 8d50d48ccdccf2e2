#pragma once

#include <cstdint>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::corpus {

struct CorruptionParams {
    double blur_sigma = 1.2;            // Gaussian blur, pixels
    double noise_sigma = 0.05;          // additive Gaussian noise
    double perspective_strength = 0.15; // corner jitter as a fraction of W/4, at most 0.3

    // Throws invalid_argument outside blur, noise >= 0 and strength in [0, 0.3].
    void validate() const;
    bool is_identity() const { return blur_sigma == 0 && noise_sigma == 0 && perspective_strength == 0; }
};

// Separable Gaussian blur of a [1,H,W] image, radius ceil(3 sigma), zero
// padding outside the frame.
ad::Tensor gaussian_blur(const ad::Tensor& image, double sigma);

// Blur, then a random projective warp (bilinear, edges clamped), then
// additive noise, then clipping to [0,1]. Each stage with a zero parameter
// is skipped, so all-zero parameters return the input unchanged.
ad::Tensor corrupt(const ad::Tensor& clean, const CorruptionParams& params, std::uint64_t seed);

}  // namespace rmgan::corpus
