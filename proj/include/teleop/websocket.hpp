#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace teleop::ws {

enum class Opcode : std::uint8_t {
  Continuation = 0x0,
  Text = 0x1,
  Binary = 0x2,
  Close = 0x8,
  Ping = 0x9,
  Pong = 0xA,
};

/// Largest message accepted from a peer (one protocol frame plus slack).
inline constexpr std::size_t kMaxMessageBytes = 80 * 1024;

/// Sec-WebSocket-Accept value for a client key.
std::string accept_key(std::string_view client_key);

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names

  [[nodiscard]] std::string header(const std::string& name) const;
  [[nodiscard]] bool is_upgrade() const;
};

/// Parses a request head once "\r\n\r\n" is buffered. Returns the request
/// and the number of bytes consumed, or nullopt if more bytes are needed.
/// Throws std::runtime_error on a malformed head.
std::optional<std::pair<HttpRequest, std::size_t>> parse_request(std::string_view buffer);

std::string handshake_response(const HttpRequest& request);
std::string client_handshake(std::string_view host, int port, std::string_view path, std::string_view key);
/// Checks the server's 101 response head for the expected accept value.
/// Returns bytes consumed or nullopt if incomplete; throws on rejection.
std::optional<std::size_t> check_handshake_response(std::string_view buffer, std::string_view key);

/// One frame on the wire. Clients must mask; servers must not.
std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask = std::nullopt);

struct Message {
  Opcode opcode = Opcode::Binary;
  std::string payload;
};

/// Reassembles messages from a byte stream, unmasking as needed. Control
/// frames are returned as they arrive. Throws std::runtime_error on protocol
/// violations or an oversized message.
class MessageReader {
public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<Message> next();

private:
  std::string buffer_;
  std::string partial_;
  std::optional<Opcode> partial_op_;
};

}  // namespace teleop::ws
