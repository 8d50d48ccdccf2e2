#pragma once

#include <memory>
#include <string>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/nn/param_set.hpp"

namespace rmgan::nn {

/// How a forward pass treats batch normalization.
struct Mode {
    ad::BnMode bn = ad::BnMode::train;
    bool update_stats = true;

    static Mode train() { return {ad::BnMode::train, true}; }
    // Batch statistics without touching the running averages.
    static Mode train_frozen() { return {ad::BnMode::train, false}; }
    static Mode eval() { return {ad::BnMode::eval, false}; }
};

struct Conv2d {
    ad::Tensor weight;  // [out, in, k, k]
    ad::Tensor bias;    // [out]
    int stride;
    int pad;

    Conv2d(ParamSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
           int stride, int pad);
    ad::Tensor operator()(const ad::Tensor& x) const { return ad::conv2d(x, weight, bias, stride, pad); }
};

struct ConvTranspose2d {
    ad::Tensor weight;  // [in, out, k, k]
    ad::Tensor bias;    // [out]
    int stride;
    int pad;

    ConvTranspose2d(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
                    std::size_t kernel, int stride, int pad);
    ad::Tensor operator()(const ad::Tensor& x) const {
        return ad::conv2d_transpose(x, weight, bias, stride, pad);
    }
};

struct Linear {
    ad::Tensor weight;  // [out, in]
    ad::Tensor bias;    // [out]

    Linear(ParamSet& params, const std::string& name, std::size_t in, std::size_t out);
    ad::Tensor operator()(const ad::Tensor& x) const { return ad::linear(x, weight, bias); }
};

struct BatchNorm {
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.9;

    ad::Tensor gamma;
    ad::Tensor beta;
    // Shared so copies of the layer keep pointing at the registered buffers.
    std::shared_ptr<ad::RunningStats> stats;

    BatchNorm(ParamSet& params, const std::string& name, std::size_t channels);
    ad::Tensor operator()(const ad::Tensor& x, Mode mode) const;
};

}  // namespace rmgan::nn
