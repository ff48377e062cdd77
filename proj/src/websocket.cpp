#include "teleop/websocket.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "teleop/digest.hpp"

namespace teleop::ws {
namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool contains_token(const std::string& value, std::string_view token) {
  return lower(value).find(lower(std::string(token))) != std::string::npos;
}

}  // namespace

std::string accept_key(std::string_view client_key) {
  std::string s(client_key);
  s += kGuid;
  return sha1_base64(s);
}

std::string HttpRequest::header(const std::string& name) const {
  const auto it = headers.find(lower(name));
  return it == headers.end() ? std::string() : it->second;
}

bool HttpRequest::is_upgrade() const {
  return contains_token(header("upgrade"), "websocket") && contains_token(header("connection"), "upgrade") &&
         !header("sec-websocket-key").empty();
}

std::optional<std::pair<HttpRequest, std::size_t>> parse_request(std::string_view buffer) {
  const auto end = buffer.find("\r\n\r\n");
  if (end == std::string_view::npos) {
    if (buffer.size() > 16 * 1024) throw std::runtime_error("request head too large");
    return std::nullopt;
  }
  HttpRequest req;
  std::string_view head = buffer.substr(0, end);
  auto eol = head.find("\r\n");
  const std::string_view request_line = head.substr(0, eol);
  const auto sp1 = request_line.find(' ');
  const auto sp2 = request_line.find(' ', sp1 == std::string_view::npos ? 0 : sp1 + 1);
  if (sp1 == std::string_view::npos || sp2 == std::string_view::npos) throw std::runtime_error("bad request line");
  req.method = std::string(request_line.substr(0, sp1));
  req.path = std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
  while (eol != std::string_view::npos) {
    const auto start = eol + 2;
    eol = head.find("\r\n", start);
    const std::string_view line = head.substr(start, eol == std::string_view::npos ? head.size() - start : eol - start);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    req.headers[lower(std::string(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return std::make_pair(std::move(req), end + 4);
}

std::string handshake_response(const HttpRequest& request) {
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         accept_key(request.header("sec-websocket-key")) + "\r\n\r\n";
}

std::string client_handshake(std::string_view host, int port, std::string_view path, std::string_view key) {
  std::string out = "GET " + std::string(path) + " HTTP/1.1\r\n";
  out += "Host: " + std::string(host) + ":" + std::to_string(port) + "\r\n";
  out += "Upgrade: websocket\r\nConnection: Upgrade\r\n";
  out += "Sec-WebSocket-Key: " + std::string(key) + "\r\n";
  out += "Sec-WebSocket-Version: 13\r\n\r\n";
  return out;
}

std::optional<std::size_t> check_handshake_response(std::string_view buffer, std::string_view key) {
  const auto end = buffer.find("\r\n\r\n");
  if (end == std::string_view::npos) return std::nullopt;
  const std::string head(buffer.substr(0, end));
  if (head.rfind("HTTP/1.1 101", 0) != 0) throw std::runtime_error("websocket upgrade refused");
  if (head.find(accept_key(key)) == std::string::npos) throw std::runtime_error("bad Sec-WebSocket-Accept");
  return end + 4;
}

std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF));
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const std::uint8_t key[4] = {static_cast<std::uint8_t>(*mask >> 24), static_cast<std::uint8_t>(*mask >> 16),
                               static_cast<std::uint8_t>(*mask >> 8), static_cast<std::uint8_t>(*mask)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

std::optional<Message> MessageReader::next() {
  while (true) {
    if (buffer_.size() < 2) return std::nullopt;
    const auto* b = reinterpret_cast<const std::uint8_t*>(buffer_.data());
    const bool fin = (b[0] & 0x80) != 0;
    if ((b[0] & 0x70) != 0) throw std::runtime_error("reserved websocket bits set");
    const auto op = static_cast<Opcode>(b[0] & 0x0F);
    const bool masked = (b[1] & 0x80) != 0;
    std::uint64_t len = b[1] & 0x7F;
    std::size_t pos = 2;
    if (len == 126) {
      if (buffer_.size() < 4) return std::nullopt;
      len = (std::uint64_t{b[2]} << 8) | b[3];
      pos = 4;
    } else if (len == 127) {
      if (buffer_.size() < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | b[2 + i];
      pos = 10;
    }
    if (len > kMaxMessageBytes || partial_.size() + len > kMaxMessageBytes) {
      throw std::runtime_error("websocket message too large");
    }
    const std::size_t mask_at = pos;
    if (masked) pos += 4;
    if (buffer_.size() < pos + len) return std::nullopt;

    std::string payload = buffer_.substr(pos, static_cast<std::size_t>(len));
    if (masked) {
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ b[mask_at + i % 4]);
    }
    buffer_.erase(0, pos + static_cast<std::size_t>(len));

    const bool control = static_cast<std::uint8_t>(op) >= 0x8;
    if (control) {
      if (!fin) throw std::runtime_error("fragmented control frame");
      return Message{op, std::move(payload)};
    }
    if (op == Opcode::Continuation) {
      if (!partial_op_) throw std::runtime_error("unexpected continuation frame");
      partial_ += payload;
    } else {
      if (partial_op_) throw std::runtime_error("new message before the previous one finished");
      partial_op_ = op;
      partial_ = std::move(payload);
    }
    if (fin) {
      Message m{*partial_op_, std::move(partial_)};
      partial_.clear();
      partial_op_.reset();
      return m;
    }
  }
}

}  // namespace teleop::ws
