#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rmgan {

// Mixes a base seed with any number of stream tags (epoch, sample index, ...)
// so that independent streams never depend on call order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Seeded generator with portable distributions. The standard library's
/// distributions are implementation-defined, so the ones used for anything
/// written to disk live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller with a cached spare.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rmgan
