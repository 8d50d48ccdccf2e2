#include "rmgan/corpus/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rmgan/common/error.hpp"

namespace rmgan::corpus {

std::optional<std::size_t> parse_label(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (kClassNames[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::string_view label_name(std::size_t class_index) {
    if (class_index >= kNumClasses) {
        throw Error(ErrorCode::label_out_of_range, "class index " + std::to_string(class_index));
    }
    return kClassNames[class_index];
}

std::size_t total(const ClassCounts& counts) { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

ClassCounts scale_counts(const ClassCounts& counts, double factor) {
    if (!(factor >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "count scale must be non-negative");
    }
    ClassCounts out{};
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (counts[k] > 0 && factor > 0.0) {
            out[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(counts[k]) * factor)));
        }
    }
    return out;
}

}  // namespace rmgan::corpus
