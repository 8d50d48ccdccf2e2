#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmgan/nn/param_set.hpp"

namespace rmgan::nn {

inline constexpr double kInitWeightStddev = 0.01;

// Weights ~ N(0, 0.01^2), biases and shifts 0, scales 1. Each tensor draws
// from its own stream keyed by (seed, name), so results do not depend on
// registration order.
void init_weights(ParamSet& params, std::uint64_t seed);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates for one ParamSet, index-aligned with its parameters.
struct AdamState {
    AdamConfig config;
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    AdamState() = default;
    AdamState(const ParamSet& params, AdamConfig config = {});
};

/// One bias-corrected Adam update over every trainable parameter.
///
/// A parameter whose gradient is identically zero is left untouched (value
/// and moments), so an all-zero gradient is the identity for any state.
/// Gradients are not modified. Throws missing_gradient naming every
/// trainable parameter without a gradient buffer.
void adam_step(ParamSet& params, AdamState& state, double lr);

/// Two-stage learning rate: `initial` before `switch_epoch`, `reduced` after.
struct LrSchedule {
    double initial = 1e-4;
    double reduced = 1e-5;
    int switch_epoch = 10;

    double rate(int epoch, double multiplier = 1.0) const;
};

}  // namespace rmgan::nn
