#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "teleop/error.hpp"
#include "teleop/gateway.hpp"
#include "teleop/websocket.hpp"

namespace teleop {
namespace {

using namespace std::chrono_literals;
using protocol::InboundMessage;
using protocol::OutboundMessage;

Maze reference_maze() { return load_maze_file(std::string(TELEOP_DATA_DIR) + "/mazes/reference_maze.txt"); }

InboundMessage hello(std::string token = {}, int version = protocol::kVersion) {
  return {1, 0.0, protocol::Hello{version, "test", std::move(token)}};
}

template <typename T>
std::optional<T> wait_for(Client& c, std::chrono::milliseconds budget = 3000ms) {
  const auto deadline = std::chrono::steady_clock::now() + budget;
  while (std::chrono::steady_clock::now() < deadline) {
    auto m = c.receive(100ms);
    if (m && std::holds_alternative<T>(*m)) return std::get<T>(*m);
  }
  return std::nullopt;
}

struct RunningServer {
  explicit RunningServer(Config c = {}, ServerOptions o = {}) : server(std::move(c), reference_maze(), with_any_port(o)) {
    server.start();
  }
  ~RunningServer() { server.stop(); }
  static ServerOptions with_any_port(ServerOptions o) {
    o.port = 0;
    return o;
  }
  Server server;
};

TEST(WebSocket, AcceptKeyKnownAnswer) {
  EXPECT_EQ(ws::accept_key("dGhlIHNhbXBsZSBub25jZQ=="), "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST(WebSocket, HandshakeRoundTrip) {
  const std::string key = "x3JJHMbDL1EzLkh9GBhXDw==";
  const std::string req = ws::client_handshake("127.0.0.1", 8765, "/", key);
  const auto parsed = ws::parse_request(req);
  ASSERT_TRUE(parsed.has_value());
  EXPECT_EQ(parsed->second, req.size());
  EXPECT_TRUE(parsed->first.is_upgrade());
  EXPECT_EQ(parsed->first.header("sec-websocket-key"), key);
  const std::string resp = ws::handshake_response(parsed->first);
  EXPECT_EQ(ws::check_handshake_response(resp, key), resp.size());
  EXPECT_THROW(ws::check_handshake_response(resp, "AAAAAAAAAAAAAAAAAAAAAA=="), std::runtime_error);
  EXPECT_FALSE(ws::parse_request("GET / HTTP/1.1\r\nHost: x\r\n").has_value());
}

TEST(WebSocket, FramesRoundTripMaskedAndUnmasked) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> byte(0, 255);
  for (std::size_t len : {0u, 1u, 125u, 126u, 127u, 65535u, 65536u, 70000u}) {
    std::string payload(len, '\0');
    for (char& ch : payload) ch = static_cast<char>(byte(rng));
    for (bool masked : {false, true}) {
      ws::MessageReader reader;
      const std::string wire = ws::encode_frame(ws::Opcode::Binary, payload,
                                                masked ? std::optional<std::uint32_t>(0xa1b2c3d4u) : std::nullopt);
      for (char ch : wire) reader.feed(std::string_view(&ch, 1));
      const auto m = reader.next();
      ASSERT_TRUE(m.has_value());
      EXPECT_EQ(m->opcode, ws::Opcode::Binary);
      EXPECT_EQ(m->payload, payload);
      EXPECT_FALSE(reader.next().has_value());
    }
  }
}

TEST(WebSocket, FragmentsWithInterleavedPing) {
  // FIN bit clear on the first fragment
  std::string first = ws::encode_frame(ws::Opcode::Text, "hel");
  first[0] = static_cast<char>(first[0] & 0x7f);
  std::string last = ws::encode_frame(ws::Opcode::Continuation, "lo");
  ws::MessageReader reader;
  reader.feed(first + ws::encode_frame(ws::Opcode::Ping, "p") + last);
  auto m = reader.next();
  ASSERT_TRUE(m);
  EXPECT_EQ(m->opcode, ws::Opcode::Ping);
  m = reader.next();
  ASSERT_TRUE(m);
  EXPECT_EQ(m->opcode, ws::Opcode::Text);
  EXPECT_EQ(m->payload, "hello");
}

TEST(WebSocket, OversizedMessageRejected) {
  ws::MessageReader reader;
  reader.feed(ws::encode_frame(ws::Opcode::Binary, std::string(ws::kMaxMessageBytes + 1, 'x')));
  EXPECT_THROW(reader.next(), std::runtime_error);
}

TEST(Gateway, HelloThenWelcomeThenTelemetry) {
  Config cfg;
  RunningServer rs(cfg);
  Client c("127.0.0.1", rs.server.port());
  c.send(hello());
  const auto welcome = wait_for<protocol::Welcome>(c);
  ASSERT_TRUE(welcome.has_value());
  EXPECT_EQ(welcome->config_digest, cfg.digest());
  EXPECT_EQ(welcome->zone_digest, cfg.zone_digest());
  EXPECT_EQ(welcome->config, cfg.canonical());
  EXPECT_EQ(welcome->maze, reference_maze().source_text);

  c.send({7, 0.0, protocol::JoyAxes{{0.5, 0, 0, 0}}});
  bool acked = false;
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (!acked && std::chrono::steady_clock::now() < deadline) {
    const auto snap = wait_for<protocol::TelemetrySnapshot>(c, 500ms);
    if (snap && snap->input_ack >= 7) {
      acked = true;
      EXPECT_EQ(snap->reference.r1, 0.5);
      EXPECT_EQ(snap->zone_digest, cfg.zone_digest());
    }
  }
  EXPECT_TRUE(acked);
  EXPECT_GE(rs.server.stats().inputs, 1u);
}

TEST(Gateway, RejectsInputBeforeHello) {
  RunningServer rs;
  Client c("127.0.0.1", rs.server.port());
  c.send({3, 0.0, protocol::JoyAxes{}});
  const auto err = wait_for<protocol::ErrorReply>(c);
  ASSERT_TRUE(err.has_value());
  EXPECT_EQ(err->code, "hello_required");
  EXPECT_EQ(err->seq, 3u);
}

TEST(Gateway, TokenAndVersionChecks) {
  Config cfg;
  cfg.token = "secret";
  RunningServer rs(cfg);
  {
    Client c("127.0.0.1", rs.server.port());
    c.send(hello("wrong"));
    const auto err = wait_for<protocol::ErrorReply>(c);
    ASSERT_TRUE(err);
    EXPECT_EQ(err->code, "unauthorized");
  }
  {
    Client c("127.0.0.1", rs.server.port());
    c.send(hello("secret", 9));
    const auto err = wait_for<protocol::ErrorReply>(c);
    ASSERT_TRUE(err);
    EXPECT_EQ(err->code, "unsupported_version");
  }
  {
    Client c("127.0.0.1", rs.server.port());
    c.send(hello("secret"));
    EXPECT_TRUE(wait_for<protocol::Welcome>(c).has_value());
  }
}

TEST(Gateway, DecodeErrorsAreReportedAndSurvivable) {
  RunningServer rs;
  Client c("127.0.0.1", rs.server.port());
  c.send(hello());
  ASSERT_TRUE(wait_for<protocol::Welcome>(c));
  c.send_bytes(protocol::frame(R"({"v":1,"kind":"joy_axes","seq":4,"axes":[1,2]})"));
  const auto err = wait_for<protocol::ErrorReply>(c);
  ASSERT_TRUE(err);
  EXPECT_EQ(err->code, "axis_count");
  const std::string whole = protocol::frame(R"({"v":1,"kind":"joy_axes","seq":5,"axes":[0,0,0,0]})");
  c.send_bytes(whole.substr(0, whole.size() - 3));
  const auto truncated = wait_for<protocol::ErrorReply>(c);
  ASSERT_TRUE(truncated);
  EXPECT_EQ(truncated->code, "truncated");
  c.send_bytes(protocol::frame("{nope"));
  const auto err2 = wait_for<protocol::ErrorReply>(c);
  ASSERT_TRUE(err2);
  EXPECT_EQ(err2->code, "malformed");
  EXPECT_GE(rs.server.stats().decode_errors, 3u);
  c.send({9, 0.0, protocol::JoyAxes{}});
  EXPECT_TRUE(wait_for<protocol::TelemetrySnapshot>(c).has_value());
}

TEST(Gateway, RateLimitDropsFloods) {
  Config cfg;
  cfg.max_input_rate = 20.0;
  RunningServer rs(cfg);
  Client c("127.0.0.1", rs.server.port());
  c.send(hello());
  ASSERT_TRUE(wait_for<protocol::Welcome>(c));
  for (std::uint64_t i = 0; i < 100; ++i) c.send({i + 2, 0.0, protocol::JoyAxes{}});
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (rs.server.stats().inputs + rs.server.stats().rate_limited < 100 &&
         std::chrono::steady_clock::now() < deadline) {
    c.receive(20ms);
  }
  const ServerStats s = rs.server.stats();
  EXPECT_EQ(s.inputs + s.rate_limited, 100u);
  EXPECT_GE(s.rate_limited, 80u);
  EXPECT_LE(s.inputs, 20u);
}

TEST(Gateway, RawTcpClient) {
  RunningServer rs;
  Client c("127.0.0.1", rs.server.port(), false);
  c.send(hello());
  ASSERT_TRUE(wait_for<protocol::Welcome>(c));
  EXPECT_TRUE(wait_for<protocol::TelemetrySnapshot>(c).has_value());
}

TEST(Gateway, ServesStaticFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "teleop_static_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<p>cockpit</p>";
  ServerOptions o;
  o.static_dir = dir.string();
  RunningServer rs(Config{}, o);

  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(rs.server.port()));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  const std::string req = "GET / HTTP/1.1\r\nHost: x\r\n\r\n";
  ASSERT_EQ(::send(fd, req.data(), req.size(), 0), static_cast<ssize_t>(req.size()));
  std::string resp;
  char buf[4096];
  for (ssize_t n; (n = ::recv(fd, buf, sizeof(buf), 0)) > 0;) resp.append(buf, static_cast<std::size_t>(n));
  ::close(fd);
  EXPECT_EQ(resp.rfind("HTTP/1.1 200", 0), 0u);
  EXPECT_NE(resp.find("<p>cockpit</p>"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, StopFinishesLog) {
  RunningServer rs;
  std::this_thread::sleep_for(300ms);
  rs.server.stop();
  const RunLog log = rs.server.finished_log();
  EXPECT_TRUE(log.complete);
  EXPECT_GE(log.records.size(), 2u);
  EXPECT_NE(log.header.start_wall_clock, "headless");
}

}  // namespace
}  // namespace teleop
