#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"
#include "rmgan/common/rng.hpp"
#include "rmgan/models/arch.hpp"
#include "rmgan/nn/layers.hpp"
#include "rmgan/nn/param_set.hpp"

namespace rmgan::models {

/// Deblurring autoencoder: [N,1,S,S] in [0,1] -> [N,1,S,S] in (0,1).
class GeneratorNet {
public:
    explicit GeneratorNet(GeneratorArch arch = {}, std::uint64_t seed = 0);
    GeneratorNet(const GeneratorNet&) = delete;
    GeneratorNet& operator=(const GeneratorNet&) = delete;

    ad::Tensor forward(const ad::Tensor& x, nn::Mode mode) const;

    const GeneratorArch& arch() const { return arch_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }

private:
    GeneratorArch arch_;
    nn::ParamSet params_{nn::Owner::generator};
    nn::Conv2d enc1_, enc2_, enc3_;
    nn::BatchNorm enc_bn1_, enc_bn2_, enc_bn3_;
    nn::ConvTranspose2d dec1_, dec2_, dec3_;
    nn::BatchNorm dec_bn1_, dec_bn2_;
};

struct DiscriminatorOutput {
    ad::Tensor real_prob;     // [N]
    ad::Tensor class_logits;  // [N, num_classes]
    ad::Tensor mi_logits;     // [N, code_dim]
};

/// Shared trunk with the real/fake head, the class head and the
/// latent-code head. The latent-code head lives in its own ParamSet
/// (owner mi_head) so it can be stepped separately.
class DiscriminatorNet {
public:
    explicit DiscriminatorNet(DiscriminatorArch arch = {}, std::uint64_t seed = 0);
    DiscriminatorNet(const DiscriminatorNet&) = delete;
    DiscriminatorNet& operator=(const DiscriminatorNet&) = delete;

    DiscriminatorOutput forward(const ad::Tensor& x, nn::Mode mode) const;

    const DiscriminatorArch& arch() const { return arch_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    nn::ParamSet& mi_params() { return mi_params_; }
    const nn::ParamSet& mi_params() const { return mi_params_; }

private:
    DiscriminatorArch arch_;
    nn::ParamSet params_{nn::Owner::discriminator};
    nn::ParamSet mi_params_{nn::Owner::mi_head};
    nn::Conv2d conv1_, conv2_, conv3_;
    nn::BatchNorm bn2_, bn3_;
    nn::Linear head_gan_, head_clc_, head_mi_;
};

/// Structured categorical code c plus unstructured Gaussian noise z.
struct LatentCode {
    std::vector<double> code;  // one-hot
    std::vector<double> z;

    // Throws malformed_one_hot unless exactly one entry is 1 and the rest 0,
    // or invalid_argument on a non-finite z.
    void validate(std::size_t code_dim, std::size_t z_dim) const;
    std::size_t class_index() const;

    static LatentCode sample(std::size_t class_index, std::size_t code_dim, std::size_t z_dim, Rng& rng);
};

class AugmentGeneratorNet {
public:
    explicit AugmentGeneratorNet(AugmenterArch arch = {}, std::uint64_t seed = 0);
    AugmentGeneratorNet(const AugmentGeneratorNet&) = delete;
    AugmentGeneratorNet& operator=(const AugmentGeneratorNet&) = delete;

    // [N,1,S,S] in (0,1) for a batch of codes.
    ad::Tensor forward(std::span<const LatentCode> codes, nn::Mode mode) const;
    // One image in eval mode; deterministic for fixed (z, c).
    ad::Tensor sample(const LatentCode& code) const;

    const AugmenterArch& arch() const { return arch_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }

private:
    AugmenterArch arch_;
    nn::ParamSet params_{nn::Owner::augmenter};
    nn::Linear project_;
    nn::BatchNorm project_bn_;
    nn::ConvTranspose2d up1_, up2_, up3_;
    nn::BatchNorm bn1_, bn2_;
};

// Throws shape_mismatch unless x is [N, channels, size, size] with N >= 1,
// and invalid_argument when values leave [0, 1].
void check_image_batch(const ad::Tensor& x, std::size_t channels, std::size_t size, const char* who);

}  // namespace rmgan::models
