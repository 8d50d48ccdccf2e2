#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace rmgan::corpus {

inline constexpr std::size_t kNumClasses = 10;
// Index of the background (non-marking) class.
inline constexpr std::size_t kNullClass = 9;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "35", "40", "FORWARD", "LEFT", "PED", "RAIL", "RIGHT", "STOP", "XING", "NULL"};

using ClassCounts = std::array<std::size_t, kNumClasses>;

// Per-class instance counts of the reference benchmark (4,030 in total).
inline constexpr ClassCounts kDefaultCounts = {112, 69, 86, 705, 54, 90, 101, 49, 64, 2700};
// Default output of the augmentation sampler (4,700 in total).
inline constexpr ClassCounts kAugmentedCounts = {300, 300, 300, 300, 300, 300, 300, 300, 300, 2000};

std::optional<std::size_t> parse_label(std::string_view name);
std::string_view label_name(std::size_t class_index);
inline bool is_positive(std::size_t class_index) { return class_index != kNullClass; }

std::size_t total(const ClassCounts& counts);

// Each count times factor, rounded, keeping at least one of every nonzero class.
ClassCounts scale_counts(const ClassCounts& counts, double factor);

}  // namespace rmgan::corpus
