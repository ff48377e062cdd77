#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace teleop {

enum class ErrorCode {
  RejectedFrame,   // keypoint frame violates its invariants
  MissingHand,     // hand keypoint row not valid
  InvalidInput,    // wrong arity or malformed operator input
  Config,          // configuration value missing or inconsistent
  Schema,          // document does not match its schema (maze, trace, log, table)
  Fault,           // non-finite value inside the control/physics loop
  DigestMismatch,  // log and config disagree
  Validation,      // metric record out of range
  IncompleteData,  // experiment data missing a modality
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace teleop
