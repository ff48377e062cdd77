#include "teleop/modality.hpp"

#include <string>

#include "teleop/error.hpp"

namespace teleop {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Pose: return "pose";
    case Modality::Joystick: return "joystick";
    case Modality::Trace: return "trace";
  }
  return "unknown";
}

Modality modality_from(std::string_view s) {
  if (s == "pose") return Modality::Pose;
  if (s == "joystick") return Modality::Joystick;
  if (s == "trace") return Modality::Trace;
  throw Error(ErrorCode::Config, "unknown modality '" + std::string(s) + "'");
}

}  // namespace teleop
