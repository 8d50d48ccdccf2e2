#include "rmgan/common/error.hpp"

namespace rmgan {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::shape_mismatch: return "shape mismatch";
        case ErrorCode::non_integral_output: return "non-integral output size";
        case ErrorCode::degenerate_batch: return "degenerate batch";
        case ErrorCode::non_scalar_loss: return "non-scalar loss";
        case ErrorCode::missing_gradient: return "missing gradient";
        case ErrorCode::probability_out_of_range: return "probability out of range";
        case ErrorCode::malformed_one_hot: return "malformed one-hot";
        case ErrorCode::label_out_of_range: return "label out of range";
        case ErrorCode::non_finite: return "non-finite value";
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::missing_file: return "missing file";
        case ErrorCode::bad_label: return "bad label";
        case ErrorCode::malformed_row: return "malformed row";
        case ErrorCode::unwritable_directory: return "unwritable directory";
        case ErrorCode::version_mismatch: return "version mismatch";
        case ErrorCode::corrupt_file: return "corrupt file";
        case ErrorCode::empty_corpus: return "empty corpus";
        case ErrorCode::split_empty: return "empty split";
        case ErrorCode::class_absent: return "class absent";
    }
    return "unknown error";
}

}  // namespace rmgan
