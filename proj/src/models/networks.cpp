#include "rmgan/models/networks.hpp"

#include <cmath>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/common/error.hpp"
#include "rmgan/nn/optim.hpp"

namespace rmgan::models {

void check_image_batch(const ad::Tensor& x, std::size_t channels, std::size_t size, const char* who) {
    if (x.rank() != 4 || x.dim(1) != channels || x.dim(2) != size || x.dim(3) != size) {
        throw Error(ErrorCode::shape_mismatch, std::string(who) + ": expected [N," + std::to_string(channels) +
                                                   "," + std::to_string(size) + "," + std::to_string(size) +
                                                   "], got " + ad::shape_to_string(x.shape()));
    }
    for (double v : x.data()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorCode::invalid_argument, std::string(who) + ": input value " + std::to_string(v) +
                                                         " outside [0,1]");
        }
    }
}

GeneratorNet::GeneratorNet(GeneratorArch arch, std::uint64_t seed)
    : arch_((arch.validate(), arch)),
      enc1_(params_, "enc1", arch_.channels, arch_.widths[0], arch_.kernel, arch_.stride, arch_.pad),
      enc2_(params_, "enc2", arch_.widths[0], arch_.widths[1], arch_.kernel, arch_.stride, arch_.pad),
      enc3_(params_, "enc3", arch_.widths[1], arch_.widths[2], arch_.kernel, arch_.stride, arch_.pad),
      enc_bn1_(params_, "enc1.bn", arch_.widths[0]),
      enc_bn2_(params_, "enc2.bn", arch_.widths[1]),
      enc_bn3_(params_, "enc3.bn", arch_.widths[2]),
      dec1_(params_, "dec1", arch_.widths[2], arch_.widths[1], arch_.kernel, arch_.stride, arch_.pad),
      dec2_(params_, "dec2", arch_.widths[1], arch_.widths[0], arch_.kernel, arch_.stride, arch_.pad),
      dec3_(params_, "dec3", arch_.widths[0], arch_.channels, arch_.kernel, arch_.stride, arch_.pad),
      dec_bn1_(params_, "dec1.bn", arch_.widths[1]),
      dec_bn2_(params_, "dec2.bn", arch_.widths[0]) {
    nn::init_weights(params_, seed);
}

ad::Tensor GeneratorNet::forward(const ad::Tensor& x, nn::Mode mode) const {
    check_image_batch(x, arch_.channels, arch_.image_size, "generator");
    const double slope = arch_.leaky_slope;
    ad::Tensor h = ad::leaky_relu(enc_bn1_(enc1_(x), mode), slope);
    h = ad::leaky_relu(enc_bn2_(enc2_(h), mode), slope);
    h = ad::leaky_relu(enc_bn3_(enc3_(h), mode), slope);
    h = ad::relu(dec_bn1_(dec1_(h), mode));
    h = ad::relu(dec_bn2_(dec2_(h), mode));
    return ad::sigmoid(dec3_(h));
}

DiscriminatorNet::DiscriminatorNet(DiscriminatorArch arch, std::uint64_t seed)
    : arch_((arch.validate(), arch)),
      conv1_(params_, "conv1", arch_.channels, arch_.widths[0], arch_.kernel, arch_.stride, arch_.pad),
      conv2_(params_, "conv2", arch_.widths[0], arch_.widths[1], arch_.kernel, arch_.stride, arch_.pad),
      conv3_(params_, "conv3", arch_.widths[1], arch_.widths[2], arch_.kernel, arch_.stride, arch_.pad),
      bn2_(params_, "conv2.bn", arch_.widths[1]),
      bn3_(params_, "conv3.bn", arch_.widths[2]),
      head_gan_(params_, "head_gan", arch_.feature_count(), 1),
      head_clc_(params_, "head_clc", arch_.feature_count(), arch_.num_classes),
      head_mi_(mi_params_, "head_mi", arch_.feature_count(), arch_.code_dim) {
    nn::init_weights(params_, seed);
    nn::init_weights(mi_params_, seed);
}

DiscriminatorOutput DiscriminatorNet::forward(const ad::Tensor& x, nn::Mode mode) const {
    check_image_batch(x, arch_.channels, arch_.image_size, "discriminator");
    const double slope = arch_.leaky_slope;
    ad::Tensor h = ad::leaky_relu(conv1_(x), slope);
    h = ad::leaky_relu(bn2_(conv2_(h), mode), slope);
    h = ad::leaky_relu(bn3_(conv3_(h), mode), slope);
    const std::size_t n = x.dim(0);
    const ad::Tensor features = ad::reshape(h, {n, arch_.feature_count()});
    return DiscriminatorOutput{
        ad::reshape(ad::sigmoid(head_gan_(features)), {n}),
        head_clc_(features),
        head_mi_(features),
    };
}

void LatentCode::validate(std::size_t code_dim, std::size_t z_dim) const {
    if (code.size() != code_dim) {
        throw Error(ErrorCode::malformed_one_hot, "code has " + std::to_string(code.size()) + " entries, expected " +
                                                      std::to_string(code_dim));
    }
    std::size_t ones = 0;
    for (double v : code) {
        if (v == 1.0) {
            ++ones;
        } else if (v != 0.0) {
            throw Error(ErrorCode::malformed_one_hot, "code entry " + std::to_string(v) + " is neither 0 nor 1");
        }
    }
    if (ones != 1) {
        throw Error(ErrorCode::malformed_one_hot, "code has " + std::to_string(ones) + " hot entries");
    }
    if (z.size() != z_dim) {
        throw Error(ErrorCode::shape_mismatch,
                    "z has " + std::to_string(z.size()) + " entries, expected " + std::to_string(z_dim));
    }
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, "non-finite z entry");
        }
    }
}

std::size_t LatentCode::class_index() const {
    for (std::size_t i = 0; i < code.size(); ++i) {
        if (code[i] == 1.0) {
            return i;
        }
    }
    throw Error(ErrorCode::malformed_one_hot, "code has no hot entry");
}

LatentCode LatentCode::sample(std::size_t class_index, std::size_t code_dim, std::size_t z_dim, Rng& rng) {
    if (class_index >= code_dim) {
        throw Error(ErrorCode::label_out_of_range,
                    "class " + std::to_string(class_index) + " for a " + std::to_string(code_dim) + "-way code");
    }
    LatentCode c;
    c.code.assign(code_dim, 0.0);
    c.code[class_index] = 1.0;
    c.z.resize(z_dim);
    for (double& v : c.z) {
        v = rng.normal();
    }
    return c;
}

AugmentGeneratorNet::AugmentGeneratorNet(AugmenterArch arch, std::uint64_t seed)
    : arch_((arch.validate(), arch)),
      project_(params_, "project", arch_.z_dim + arch_.code_dim, arch_.widths[0] * arch_.seed_size() * arch_.seed_size()),
      project_bn_(params_, "project.bn", arch_.widths[0]),
      up1_(params_, "up1", arch_.widths[0], arch_.widths[1], arch_.kernel, arch_.stride, arch_.pad),
      up2_(params_, "up2", arch_.widths[1], arch_.widths[2], arch_.kernel, arch_.stride, arch_.pad),
      up3_(params_, "up3", arch_.widths[2], arch_.channels, arch_.kernel, arch_.stride, arch_.pad),
      bn1_(params_, "up1.bn", arch_.widths[1]),
      bn2_(params_, "up2.bn", arch_.widths[2]) {
    nn::init_weights(params_, seed);
}

ad::Tensor AugmentGeneratorNet::forward(std::span<const LatentCode> codes, nn::Mode mode) const {
    if (codes.empty()) {
        throw Error(ErrorCode::invalid_argument, "augmenter: empty code batch");
    }
    const std::size_t n = codes.size();
    const std::size_t in = arch_.z_dim + arch_.code_dim;
    std::vector<double> input;
    input.reserve(n * in);
    for (const auto& c : codes) {
        c.validate(arch_.code_dim, arch_.z_dim);
        input.insert(input.end(), c.z.begin(), c.z.end());
        input.insert(input.end(), c.code.begin(), c.code.end());
    }
    const std::size_t s = arch_.seed_size();
    ad::Tensor h = project_(ad::Tensor({n, in}, std::move(input)));
    h = ad::relu(project_bn_(ad::reshape(h, {n, arch_.widths[0], s, s}), mode));
    h = ad::relu(bn1_(up1_(h), mode));
    h = ad::relu(bn2_(up2_(h), mode));
    return ad::sigmoid(up3_(h));
}

ad::Tensor AugmentGeneratorNet::sample(const LatentCode& code) const {
    return forward(std::span<const LatentCode>(&code, 1), nn::Mode::eval());
}

}  // namespace rmgan::models
