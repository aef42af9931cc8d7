#include "etc_cbir/error.hpp"

namespace etc_cbir {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension_too_small: return "dimension-too-small";
    case ErrorCode::dimension_not_multiple_of_16: return "dimension-not-multiple-of-16";
    case ErrorCode::empty_grid: return "empty-grid";
    case ErrorCode::empty_training_set: return "empty-training-set";
    case ErrorCode::too_few_points: return "too-few-points";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::codebook_mismatch: return "codebook-mismatch";
    case ErrorCode::unknown_id: return "unknown-id";
    case ErrorCode::invalid_field: return "invalid-field";
    case ErrorCode::format_version_mismatch: return "format-version-mismatch";
    case ErrorCode::truncated_file: return "truncated-file";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::decode_error: return "decode-error";
    case ErrorCode::empty_truth_set: return "empty-truth-set";
    case ErrorCode::no_queries: return "no-queries";
    case ErrorCode::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace etc_cbir
