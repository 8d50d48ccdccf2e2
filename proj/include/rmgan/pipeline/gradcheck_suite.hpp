#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmgan/autodiff/gradcheck.hpp"

namespace rmgan::pipeline {

struct GradcheckSuiteOptions {
    std::uint64_t seed = 0;
    std::size_t batch = 8;
    double step = 1e-4;
    double tolerance = 1e-3;
    // Entries sampled per tensor of the full-size networks; 0 skips them.
    std::size_t full_size_entries = 40;
};

struct GradcheckPart {
    std::string name;  // e.g. "generator/tiny"
    ad::GradCheckReport report;
};

struct GradcheckSuiteReport {
    std::vector<GradcheckPart> parts;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    bool passed = false;

    std::string to_text() const;
};

/// Finite-difference check of every parameter of the generator, the
/// discriminator with all three heads and the augmenter, on reduced-width
/// networks, plus a sampled check of the full-size ones. Weights are drawn
/// uniformly from +-sqrt(3 / fan_in), other parameters from [-1, 1].
GradcheckSuiteReport run_gradcheck_suite(const GradcheckSuiteOptions& options = {});

}  // namespace rmgan::pipeline
