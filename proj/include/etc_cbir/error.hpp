#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etc_cbir {

enum class ErrorCode {
  dimension_too_small,
  dimension_not_multiple_of_16,
  empty_grid,
  empty_training_set,
  too_few_points,
  dimension_mismatch,
  duplicate_id,
  codebook_mismatch,
  unknown_id,
  invalid_field,
  format_version_mismatch,
  truncated_file,
  parse_error,
  io_error,
  decode_error,
  empty_truth_set,
  no_queries,
  invalid_argument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library surfaces as this exception; `code()` is the
/// machine-checkable category, `what()` the one-line diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace etc_cbir
