#include "rmgan/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rmgan/autodiff/ops.hpp"
#include "rmgan/autodiff/tape.hpp"
#include "rmgan/common/rng.hpp"

namespace rmgan::ad {

GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn, std::span<const NamedTensor> params,
                                const GradCheckOptions& options) {
    for (const auto& p : params) {
        p.tensor.zero_grad();
    }
    {
        Tape tape;
        TapeScope scope(tape);
        const Tensor loss = loss_fn();
        tape.backward(loss);
    }

    GradCheckReport report;
    Rng rng(options.seed);
    for (const auto& named : params) {
        Tensor param = named.tensor;
        GradCheckEntry entry{named.name};
        const std::size_t n = param.numel();
        std::vector<std::size_t> indices(n);
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        if (options.max_entries_per_tensor != 0 && options.max_entries_per_tensor < n) {
            for (std::size_t i = 0; i < options.max_entries_per_tensor; ++i) {
                std::swap(indices[i], indices[i + rng.below(n - i)]);
            }
            indices.resize(options.max_entries_per_tensor);
            std::sort(indices.begin(), indices.end());
        }
        const std::vector<double> analytic = param.has_grad()
                                                 ? std::vector<double>(param.grad().begin(), param.grad().end())
                                                 : std::vector<double>(n, 0.0);
        auto values = param.mutable_data();
        for (std::size_t idx : indices) {
            const double original = values[idx];
            NoGradGuard no_grad;
            std::vector<bool> plus_signs;
            std::vector<bool> minus_signs;
            double plus = 0.0;
            double minus = 0.0;
            {
                KinkMonitor monitor;
                values[idx] = original + options.step;
                plus = loss_fn().item();
                plus_signs = monitor.signs();
            }
            {
                KinkMonitor monitor;
                values[idx] = original - options.step;
                minus = loss_fn().item();
                minus_signs = monitor.signs();
            }
            values[idx] = original;
            if (plus_signs != minus_signs) {
                ++entry.skipped;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double denom =
                std::max({std::abs(numeric), std::abs(analytic[idx]), options.magnitude_floor});
            const double rel = std::abs(numeric - analytic[idx]) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, std::isfinite(rel) ? rel : INFINITY);
            ++entry.checked;
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.checked += entry.checked;
        report.skipped += entry.skipped;
        report.tensors.push_back(std::move(entry));
    }
    report.passed = report.max_rel_error < options.tolerance && report.checked > 0;
    return report;
}

}  // namespace rmgan::ad
