#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::ad {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-3;
    // Denominator floor for the relative error; gradients smaller than this
    // are compared in absolute terms.
    double magnitude_floor = 1e-7;
    // 0 checks every entry; otherwise a seeded sample of this many per tensor.
    std::size_t max_entries_per_tensor = 0;
    std::uint64_t seed = 0;
};

struct GradCheckEntry {
    std::string name;
    std::size_t checked = 0;
    // Entries whose stencil straddles a relu/leaky-relu kink.
    std::size_t skipped = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> tensors;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    bool passed = false;
};

/// Compares tape gradients of loss_fn against central finite differences.
///
/// loss_fn must rebuild the scalar loss from the current parameter values
/// and be deterministic; it runs once under a tape and twice per checked
/// entry with recording off. Parameter gradients are cleared first and hold
/// the tape gradient afterwards.
GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn, std::span<const NamedTensor> params,
                                const GradCheckOptions& options = {});

}  // namespace rmgan::ad
