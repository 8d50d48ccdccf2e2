#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmgan {

enum class ErrorCode {
    shape_mismatch,
    non_integral_output,
    degenerate_batch,
    non_scalar_loss,
    missing_gradient,
    probability_out_of_range,
    malformed_one_hot,
    label_out_of_range,
    non_finite,
    invalid_argument,
    missing_file,
    bad_label,
    malformed_row,
    unwritable_directory,
    version_mismatch,
    corrupt_file,
    empty_corpus,
    split_empty,
    class_absent,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure the library reports carries a code so
/// callers (and tests) can tell error kinds apart without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rmgan
