#include "teleop/gateway.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "teleop/error.hpp"
#include "teleop/session.hpp"

namespace teleop {
namespace {

constexpr std::size_t kQueueLimit = 32;
constexpr int kPollMs = 50;

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

bool send_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

addrinfo* resolve(const std::string& host, int port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::Io, "cannot resolve " + host + ": " + gai_strerror(rc));
  }
  return res;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string content_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".txt" || ext == ".cfg") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

std::string http_response(int status, const std::string& reason, const std::string& type, const std::string& body) {
  std::ostringstream out;
  out << "HTTP/1.1 " << status << ' ' << reason << "\r\n"
      << "Content-Type: " << type << "\r\n"
      << "Content-Length: " << body.size() << "\r\n"
      << "Connection: close\r\n\r\n"
      << body;
  return out.str();
}

class RateLimiter {
public:
  explicit RateLimiter(double rate) : rate_(rate), capacity_(std::max(1.0, rate * 0.1)), tokens_(capacity_) {}

  bool allow(std::chrono::steady_clock::time_point now) {
    if (last_) {
      const double dt = std::chrono::duration<double>(now - *last_).count();
      tokens_ = std::min(capacity_, tokens_ + dt * rate_);
    }
    last_ = now;
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

private:
  double rate_;
  double capacity_;
  double tokens_;
  std::optional<std::chrono::steady_clock::time_point> last_;
};

}  // namespace

struct Server::Connection {
  enum class Mode { Unknown, Http, WebSocket, Raw };

  explicit Connection(int fd_, double rate) : fd(fd_) {
    limiters.fill(RateLimiter(rate));
  }

  int fd;
  Mode mode = Mode::Unknown;
  bool ready = false;  // hello accepted
  std::atomic<bool> open{true};
  bool close_after_flush = false;
  std::string inbound;
  ws::MessageReader ws_reader;
  protocol::FrameReader raw_reader;
  std::array<RateLimiter, 6> limiters{RateLimiter(1), RateLimiter(1), RateLimiter(1),
                                      RateLimiter(1), RateLimiter(1), RateLimiter(1)};
  std::atomic<bool> subscribed{false};

  std::mutex mutex;
  std::condition_variable cv;
  struct Item {
    std::string bytes;
    bool droppable;
  };
  std::deque<Item> queue;
  std::thread reader;
  std::thread writer;

  /// Returns true if an older frame had to be dropped.
  bool enqueue(std::string bytes, bool droppable) {
    bool dropped = false;
    {
      std::lock_guard lock(mutex);
      if (droppable && queue.size() >= kQueueLimit) {
        for (auto it = queue.begin(); it != queue.end(); ++it) {
          if (it->droppable) {
            queue.erase(it);
            dropped = true;
            break;
          }
        }
        if (!dropped) return true;
      }
      queue.push_back({std::move(bytes), droppable});
    }
    cv.notify_one();
    return dropped;
  }

  void send_payload(const std::string& frame_bytes, bool droppable) {
    if (mode == Mode::WebSocket) {
      enqueue(ws::encode_frame(ws::Opcode::Binary, frame_bytes), droppable);
    } else {
      enqueue(frame_bytes, droppable);
    }
  }

  void write_loop() {
    while (true) {
      Item item;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return !queue.empty() || !open; });
        if (queue.empty()) break;
        item = std::move(queue.front());
        queue.pop_front();
      }
      if (!send_all(fd, item.bytes)) {
        open = false;
        break;
      }
      std::lock_guard lock(mutex);
      if (close_after_flush && queue.empty()) {
        open = false;
        ::shutdown(fd, SHUT_RDWR);
        break;
      }
    }
  }

  void close() {
    open = false;
    ::shutdown(fd, SHUT_RDWR);
    cv.notify_all();
  }
};

Server::Server(Config config, Maze maze, ServerOptions options)
    : config_(std::move(config)), maze_(std::move(maze)), options_(std::move(options)) {
  config_.validate();
  protocol::Welcome w;
  w.config = config_.canonical();
  w.config_digest = config_.digest();
  w.zone_digest = config_.zone_digest();
  w.maze = maze_.source_text;
  welcome_frame_ = protocol::encode(protocol::OutboundMessage{w});
}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  addrinfo* res = resolve(options_.host, options_.port, true);
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) io_error("cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
  running_ = true;
  loop_ = std::thread([this] { session_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  mailbox_.notify();
  if (acceptor_.joinable()) acceptor_.join();
  if (loop_.joinable()) loop_.join();
  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(conns_mutex_);
    conns.swap(conns_);
  }
  for (auto& c : conns) c->close();
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  ::close(listen_fd_);
  listen_fd_ = -1;
}

ServerStats Server::stats() const {
  return {ticks_, connections_, inputs_, rate_limited_, decode_errors_, frames_dropped_, echoes_};
}

RunLog Server::finished_log() const {
  std::lock_guard lock(log_mutex_);
  return finished_log_;
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, kPollMs) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    ++connections_;
    auto conn = std::make_shared<Connection>(fd, config_.max_input_rate);
    conn->writer = std::thread([c = conn.get()] { c->write_loop(); });
    conn->reader = std::thread([this, conn] { read_loop(conn); });
    std::lock_guard lock(conns_mutex_);
    // reap closed connections
    for (auto it = conns_.begin(); it != conns_.end();) {
      auto& c = *it;
      if (!c->open) {
        c->close();
        if (c->reader.joinable()) c->reader.join();
        if (c->writer.joinable()) c->writer.join();
        ::close(c->fd);
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    conns_.push_back(std::move(conn));
  }
}

void Server::send_error(Connection& conn, const std::string& code, const std::string& message, std::uint64_t seq) {
  conn.send_payload(protocol::encode(protocol::OutboundMessage{protocol::ErrorReply{code, message, seq}}), false);
}

void Server::read_loop(const std::shared_ptr<Connection>& conn_ptr) {
  Connection& conn = *conn_ptr;
  std::array<char, 16 * 1024> buf{};
  try {
    while (running_ && conn.open) {
      pollfd p{conn.fd, POLLIN, 0};
      const int pr = ::poll(&p, 1, kPollMs);
      if (pr <= 0) continue;
      const ssize_t n = ::recv(conn.fd, buf.data(), buf.size(), 0);
      if (n <= 0) break;
      const std::string_view chunk(buf.data(), static_cast<std::size_t>(n));

      if (conn.mode == Connection::Mode::Unknown || conn.mode == Connection::Mode::Http) {
        conn.inbound.append(chunk);
        if (conn.mode == Connection::Mode::Unknown) {
          if (conn.inbound.size() < 4) continue;
          conn.mode = conn.inbound.starts_with("GET ") ? Connection::Mode::Http : Connection::Mode::Raw;
          if (conn.mode == Connection::Mode::Raw) {
            conn.raw_reader.feed(conn.inbound);
            conn.inbound.clear();
          }
        }
        if (conn.mode == Connection::Mode::Http) {
          auto parsed = ws::parse_request(conn.inbound);
          if (!parsed) continue;
          auto& [req, used] = *parsed;
          if (req.is_upgrade()) {
            conn.enqueue(ws::handshake_response(req), false);
            conn.mode = Connection::Mode::WebSocket;
            conn.ws_reader.feed(std::string_view(conn.inbound).substr(used));
            conn.inbound.clear();
          } else {
            std::string response = http_response(404, "Not Found", "text/plain", "not found\n");
            if (!options_.static_dir.empty() && req.path.find("..") == std::string::npos) {
              std::string rel = req.path.substr(0, req.path.find('?'));
              if (rel == "/" || rel.empty()) rel = "/index.html";
              const std::filesystem::path file = std::filesystem::path(options_.static_dir) / rel.substr(1);
              std::ifstream in(file, std::ios::binary);
              if (in) {
                std::ostringstream body;
                body << in.rdbuf();
                response = http_response(200, "OK", content_type(file), body.str());
              }
            }
            {
              std::lock_guard lock(conn.mutex);
              conn.close_after_flush = true;
            }
            conn.enqueue(std::move(response), false);
            break;
          }
        }
      } else if (conn.mode == Connection::Mode::WebSocket) {
        conn.ws_reader.feed(chunk);
      } else {
        conn.raw_reader.feed(chunk);
      }

      if (conn.mode == Connection::Mode::WebSocket) {
        while (auto m = conn.ws_reader.next()) {
          switch (m->opcode) {
            case ws::Opcode::Close:
              conn.enqueue(ws::encode_frame(ws::Opcode::Close, m->payload.substr(0, 2)), false);
              {
                std::lock_guard lock(conn.mutex);
                conn.close_after_flush = true;
              }
              conn.open = false;
              break;
            case ws::Opcode::Ping:
              conn.enqueue(ws::encode_frame(ws::Opcode::Pong, m->payload), false);
              break;
            case ws::Opcode::Pong:
              break;
            case ws::Opcode::Text:
              handle_payload(conn, m->payload, false);
              break;
            default:
              handle_payload(conn, m->payload, true);
              break;
          }
          if (!conn.open) break;
        }
      } else if (conn.mode == Connection::Mode::Raw) {
        while (true) {
          std::optional<std::string> payload;
          try {
            payload = conn.raw_reader.next();
          } catch (const protocol::DecodeError& e) {
            // the stream cannot be resynchronized after an oversized prefix
            ++decode_errors_;
            send_error(conn, std::string(protocol::to_string(e.code())), e.what(), 0);
            {
              std::lock_guard lock(conn.mutex);
              conn.close_after_flush = true;
            }
            conn.open = false;
            break;
          }
          if (!payload) break;
          handle_payload(conn, *payload, false);
        }
      }
    }
  } catch (const std::exception&) {
    // protocol violation at the transport level: drop the client
  }
  conn.subscribed = false;
  {
    std::lock_guard lock(conn.mutex);
    if (conn.queue.empty()) {
      conn.open = false;
    } else {
      conn.close_after_flush = true;
    }
  }
  conn.cv.notify_all();
}

void Server::handle_payload(Connection& conn, std::string_view payload, bool framed) {
  protocol::InboundMessage msg;
  try {
    msg = framed ? protocol::decode(payload) : protocol::inbound_from_json(payload);
  } catch (const protocol::DecodeError& e) {
    ++decode_errors_;
    send_error(conn, std::string(protocol::to_string(e.code())), e.what(), 0);
    return;
  }
  handle_message(conn, std::move(msg));
}

void Server::handle_message(Connection& conn, protocol::InboundMessage msg) {
  if (const auto* hello = std::get_if<protocol::Hello>(&msg.payload)) {
    if (hello->version != protocol::kVersion) {
      send_error(conn, "unsupported_version",
                 "server speaks protocol version " + std::to_string(protocol::kVersion), msg.seq);
      return;
    }
    if (!config_.token.empty() && hello->token != config_.token) {
      send_error(conn, "unauthorized", "session token rejected", msg.seq);
      return;
    }
    conn.ready = true;
    conn.send_payload(welcome_frame_, false);
    conn.subscribed = true;
    return;
  }
  if (!conn.ready) {
    send_error(conn, "hello_required", "send hello before any other message", msg.seq);
    return;
  }
  const auto kind = static_cast<std::size_t>(msg.kind());
  if (!conn.limiters[kind].allow(std::chrono::steady_clock::now())) {
    ++rate_limited_;
    return;
  }
  ++inputs_;
  mailbox_.post(std::move(msg));
}

void Server::broadcast(const std::string& frame_bytes) {
  std::lock_guard lock(conns_mutex_);
  for (auto& c : conns_) {
    if (!c->open || !c->subscribed) continue;
    const std::string bytes =
        c->mode == Connection::Mode::WebSocket ? ws::encode_frame(ws::Opcode::Binary, frame_bytes) : frame_bytes;
    if (c->enqueue(bytes, true)) ++frames_dropped_;
  }
}

void Server::session_loop() {
  using clock = std::chrono::steady_clock;
  Session session(config_, maze_, options_.participant);
  session.header().start_wall_clock = utc_now();

  std::ofstream log_out;
  if (!options_.log_path.empty()) {
    log_out.open(options_.log_path, std::ios::binary | std::ios::trunc);
    if (log_out) log_out << JsonlLogWriter::header_line(session.log().header) << std::flush;
  }
  auto append_tlx = [&](const std::vector<TlxRecord>& records) {
    if (records.empty() || options_.tlx_path.empty()) return;
    const bool fresh = !std::filesystem::exists(options_.tlx_path) || std::filesystem::file_size(options_.tlx_path) == 0;
    std::ofstream out(options_.tlx_path, std::ios::app);
    if (fresh) out << tlx_csv_header() << '\n';
    for (const auto& r : records) out << tlx_csv_row(r) << '\n';
  };

  const auto tick_period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(config_.reference_period()));
  const auto telemetry_period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / config_.telemetry_rate));
  auto next_tick = clock::now() + tick_period;
  auto next_telemetry = clock::now() + telemetry_period;
  std::vector<RunEvent> pending_events;
  std::size_t logged_records = 0;
  std::size_t logged_events = 0;

  while (running_) {
    const bool woke = mailbox_.wait_until(std::min(next_tick, next_telemetry));
    if (!running_) break;
    const auto now = clock::now();

    if (now >= next_tick) {
      const auto snap = session.tick(mailbox_.drain());
      pending_events.insert(pending_events.end(), snap.events.begin(), snap.events.end());
      ++ticks_;
      const auto& log = session.log();
      if (log_out) {
        for (; logged_records < log.records.size(); ++logged_records) {
          log_out << JsonlLogWriter::record_line(log.records[logged_records]);
          for (; logged_events < log.events.size() && log.events[logged_events].tick <= log.records[logged_records].tick;
               ++logged_events) {
            log_out << JsonlLogWriter::event_line(log.events[logged_events]);
          }
        }
        log_out.flush();
      }
      append_tlx(session.take_tlx());
      next_tick += tick_period;
      if (now - next_tick > std::chrono::seconds(1)) next_tick = now + tick_period;
    } else if (woke) {
      const PendingInputs pending = mailbox_.peek();
      if (!pending.empty()) {
        ++echoes_;
        broadcast(protocol::snapshot_to_frame(session.preview(pending)));
      }
    }

    if (now >= next_telemetry) {
      auto snap = session.snapshot();
      snap.events = std::move(pending_events);
      pending_events.clear();
      broadcast(protocol::snapshot_to_frame(snap));
      next_telemetry += telemetry_period;
      if (now - next_telemetry > std::chrono::seconds(1)) next_telemetry = now + telemetry_period;
    }
  }

  RunLog log = session.finish();
  if (log_out) log_out << JsonlLogWriter::end_line(log.records.size()) << std::flush;
  std::lock_guard lock(log_mutex_);
  finished_log_ = std::move(log);
}

// ---- client ----------------------------------------------------------------

Client::Client(const std::string& host, int port, bool websocket) : websocket_(websocket) {
  addrinfo* res = resolve(host, port, false);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) io_error("cannot connect to " + host + ":" + std::to_string(port));
  set_nodelay(fd_);
  if (!websocket_) return;

  const std::string key = "dGhlIHNhbXBsZSBub25jZQ==";
  if (!send_all(fd_, ws::client_handshake(host, port, "/", key))) io_error("handshake send failed");
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (true) {
    if (std::chrono::steady_clock::now() > deadline) throw Error(ErrorCode::Io, "websocket handshake timed out");
    if (auto used = ws::check_handshake_response(handshake_buffer_, key)) {
      ws_reader_.feed(std::string_view(handshake_buffer_).substr(*used));
      handshake_buffer_.clear();
      break;
    }
    std::array<char, 4096> buf{};
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n <= 0) throw Error(ErrorCode::Io, "connection closed during handshake");
    handshake_buffer_.append(buf.data(), static_cast<std::size_t>(n));
  }
}

Client::~Client() { close(); }

void Client::close() {
  if (fd_ < 0) return;
  if (websocket_) send_all(fd_, ws::encode_frame(ws::Opcode::Close, "\x03\xe8", mask_state_));
  ::shutdown(fd_, SHUT_RDWR);
  ::close(fd_);
  fd_ = -1;
}

void Client::send(const protocol::InboundMessage& msg) { send_bytes(protocol::encode(msg)); }

void Client::send_bytes(std::string_view bytes) {
  if (fd_ < 0) throw Error(ErrorCode::Io, "client is closed");
  bool ok = true;
  if (websocket_) {
    mask_state_ = mask_state_ * 1664525u + 1013904223u;
    ok = send_all(fd_, ws::encode_frame(ws::Opcode::Binary, bytes, mask_state_));
  } else {
    ok = send_all(fd_, bytes);
  }
  if (!ok) io_error("send failed");
}

std::optional<std::string> Client::next_payload() {
  if (!websocket_) return raw_reader_.next();
  while (auto m = ws_reader_.next()) {
    if (m->opcode == ws::Opcode::Binary) return std::string(protocol::frame_payload(m->payload));
    if (m->opcode == ws::Opcode::Text) return m->payload;
    if (m->opcode == ws::Opcode::Close) throw Error(ErrorCode::Io, "server closed the connection");
  }
  return std::nullopt;
}

bool Client::read_some(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return false;
  std::array<char, 16 * 1024> buf{};
  const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n <= 0) throw Error(ErrorCode::Io, "server closed the connection");
  const std::string_view chunk(buf.data(), static_cast<std::size_t>(n));
  if (websocket_) {
    ws_reader_.feed(chunk);
  } else {
    raw_reader_.feed(chunk);
  }
  return true;
}

std::optional<protocol::OutboundMessage> Client::receive(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw Error(ErrorCode::Io, "client is closed");
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto payload = next_payload()) return protocol::outbound_from_json(*payload);
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    read_some(left);
  }
}

}  // namespace teleop
