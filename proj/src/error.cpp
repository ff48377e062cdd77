#include "teleop/error.hpp"

namespace teleop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RejectedFrame: return "rejected_frame";
    case ErrorCode::MissingHand: return "missing_hand";
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Config: return "config";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Fault: return "fault";
    case ErrorCode::DigestMismatch: return "digest_mismatch";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::IncompleteData: return "incomplete_data";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace teleop
