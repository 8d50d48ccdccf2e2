#include "rmgan/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "rmgan/common/error.hpp"
#include "rmgan/common/rng.hpp"

namespace rmgan::nn {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

void init_weights(ParamSet& params, std::uint64_t seed) {
    for (auto& p : params.params()) {
        auto values = p.value.mutable_data();
        switch (p.kind) {
            case ParamKind::weight: {
                Rng rng(derive_seed(seed, {fnv1a(std::string(to_string(params.owner()))), fnv1a(p.name)}));
                for (double& v : values) {
                    v = rng.normal(0.0, kInitWeightStddev);
                }
                break;
            }
            case ParamKind::bias:
            case ParamKind::shift:
                std::fill(values.begin(), values.end(), 0.0);
                break;
            case ParamKind::scale:
                std::fill(values.begin(), values.end(), 1.0);
                break;
        }
    }
}

AdamState::AdamState(const ParamSet& params, AdamConfig cfg) : config(cfg) {
    for (const auto& p : params.params()) {
        m.emplace_back(p.value.numel(), 0.0);
        v.emplace_back(p.value.numel(), 0.0);
    }
}

void adam_step(ParamSet& params, AdamState& state, double lr) {
    auto& list = params.params();
    if (state.m.size() != list.size()) {
        throw Error(ErrorCode::shape_mismatch, "optimizer state tracks " + std::to_string(state.m.size()) +
                                                   " parameters, set has " + std::to_string(list.size()));
    }
    std::string missing;
    for (const auto& p : list) {
        if (p.trainable && !p.value.has_grad()) {
            missing += (missing.empty() ? "" : ", ") + p.name;
        }
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::missing_gradient, "no gradient for " + missing);
    }

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < list.size(); ++i) {
        auto& p = list[i];
        if (!p.trainable) {
            continue;
        }
        const auto g = p.value.grad();
        if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) {
            continue;
        }
        auto w = p.value.mutable_data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            w[k] -= lr * m_hat / (std::sqrt(v_hat) + state.config.epsilon);
        }
    }
}

double LrSchedule::rate(int epoch, double multiplier) const {
    return multiplier * (epoch < switch_epoch ? initial : reduced);
}

}  // namespace rmgan::nn
