#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "teleop/config.hpp"
#include "teleop/mailbox.hpp"
#include "teleop/protocol.hpp"
#include "teleop/run_log.hpp"
#include "teleop/websocket.hpp"
#include "teleop/world.hpp"

namespace teleop {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;              // 0 picks a free port
  std::string static_dir;       // served over plain HTTP GET when set
  std::string log_path;         // JSONL run log, appended per tick
  std::string tlx_path;         // CSV that TLX submissions are appended to
  std::string participant;
};

struct ServerStats {
  std::uint64_t ticks = 0;
  std::uint64_t connections = 0;
  std::uint64_t inputs = 0;
  std::uint64_t rate_limited = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t echoes = 0;
};

/// Live gateway: accepts WebSocket or raw length-prefixed TCP clients,
/// funnels their inputs into one mailbox and paces the session loop to the
/// wall clock.
///
/// Threads: one acceptor, one reader and one writer per client, one session
/// loop. Only the loop thread touches the session. Each client has a bounded
/// outgoing queue; when it fills, the oldest telemetry frame is dropped.
class Server {
public:
  Server(Config config, Maze maze, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts all threads. Throws Error(Io) if the port is unavailable.
  void start();
  /// Stops accepting, closes clients, finishes the log. Idempotent.
  void stop();

  [[nodiscard]] int port() const { return port_; }
  [[nodiscard]] ServerStats stats() const;
  /// The run log after stop().
  [[nodiscard]] RunLog finished_log() const;

  struct Connection;

private:
  void accept_loop();
  void session_loop();
  void read_loop(const std::shared_ptr<Connection>& conn);
  void handle_payload(Connection& conn, std::string_view payload, bool framed);
  void handle_message(Connection& conn, protocol::InboundMessage msg);
  void broadcast(const std::string& frame_bytes);
  void send_error(Connection& conn, const std::string& code, const std::string& message, std::uint64_t seq);

  Config config_;
  Maze maze_;
  ServerOptions options_;
  std::string welcome_frame_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  SharedMailbox mailbox_;
  std::thread acceptor_;
  std::thread loop_;
  mutable std::mutex conns_mutex_;
  std::list<std::shared_ptr<Connection>> conns_;
  mutable std::mutex log_mutex_;
  RunLog finished_log_;

  std::atomic<std::uint64_t> ticks_{0}, connections_{0}, inputs_{0}, rate_limited_{0}, decode_errors_{0},
      frames_dropped_{0}, echoes_{0};
};

/// Minimal blocking client for tests and trace injection.
class Client {
public:
  /// Connects and, for WebSocket mode, completes the upgrade handshake.
  Client(const std::string& host, int port, bool websocket = true);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const protocol::InboundMessage& msg);
  /// Sends bytes as one WebSocket binary message, or raw on a TCP client.
  void send_bytes(std::string_view bytes);
  /// Next server message, or nullopt on timeout. Throws Error(Io) when the
  /// server closed the connection.
  std::optional<protocol::OutboundMessage> receive(std::chrono::milliseconds timeout);
  void close();

private:
  bool read_some(std::chrono::milliseconds timeout);
  std::optional<std::string> next_payload();

  int fd_ = -1;
  bool websocket_;
  std::string handshake_buffer_;
  ws::MessageReader ws_reader_;
  protocol::FrameReader raw_reader_;
  std::uint32_t mask_state_ = 0x9e3779b9u;
};

}  // namespace teleop
