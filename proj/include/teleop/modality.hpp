#pragma once

#include <string_view>

namespace teleop {

enum class Modality { Pose, Joystick, Trace };

std::string_view to_string(Modality m);
Modality modality_from(std::string_view s);  // throws Config

}  // namespace teleop
