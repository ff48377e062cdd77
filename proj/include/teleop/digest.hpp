#pragma once

#include <string>
#include <string_view>

namespace teleop {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Raw SHA-1 digest, base64-encoded (WebSocket accept key).
std::string sha1_base64(std::string_view data);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace teleop
