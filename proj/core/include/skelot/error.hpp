#pragma once

#include <stdexcept>
#include <string>

namespace skelot {

/// Failure categories surfaced by the library. Each maps to one of the
/// documented error conditions of the public operations.
enum class ErrorCode {
  inconsistent_gluing,
  degenerate_face,
  zero_mass,
  face_missing,
  face_mismatch,
  p_not_in_body,
  no_lattice_point,
  non_unique_gradient,
  empty_semigroup,
  degree_mismatch,
  dimension_not_1,
  generation_failed,
  malformed_input,
  internal,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skelot
