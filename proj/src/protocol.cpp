#include "teleop/protocol.hpp"

#include <cmath>

#include "json.hpp"
#include "teleop/error.hpp"

namespace teleop::protocol {
namespace {

using nlohmann::json;

[[noreturn]] void fail(DecodeErrorCode code, const std::string& msg) { throw DecodeError(code, msg); }

const json& field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(DecodeErrorCode::Malformed, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) fail(DecodeErrorCode::Malformed, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_number(const json& j, const char* key, std::uint64_t fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_unsigned()) {
    if (it->is_number_integer() && it->get<std::int64_t>() >= 0) return it->get<std::uint64_t>();
    fail(DecodeErrorCode::Malformed, std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

std::string text(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) fail(DecodeErrorCode::Malformed, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) fail(DecodeErrorCode::Malformed, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& v, const char* key) {
  if (!v.is_array() || v.size() != N) {
    fail(DecodeErrorCode::Malformed,
         std::string("field '") + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) fail(DecodeErrorCode::Malformed, std::string("field '") + key + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
Eigen::Vector3d vec3_from(const json& j, const char* key) {
  const auto a = numbers<3>(field(j, key), key);
  return {a[0], a[1], a[2]};
}
json point(Point2 p) { return json::array({p.x, p.y}); }
Point2 point_from(const json& v, const char* key) {
  const auto a = numbers<2>(v, key);
  return {a[0], a[1]};
}

Modality mode_from(const std::string& s) {
  try {
    return modality_from(s);
  } catch (const Error&) {
    fail(DecodeErrorCode::Malformed, "unknown mode '" + s + "'");
  }
}

json parse_object(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(DecodeErrorCode::Malformed, "payload is not a JSON object");
  const json& v = field(j, "v");
  if (!v.is_number_integer()) fail(DecodeErrorCode::Malformed, "field 'v' must be an integer");
  if (v.get<int>() != kVersion) {
    fail(DecodeErrorCode::UnsupportedVersion,
         "unsupported protocol version " + v.dump() + " (server speaks " + std::to_string(kVersion) + ")");
  }
  return j;
}

json event_json(const RunEvent& e) {
  return {{"kind", std::string(to_string(e.kind))}, {"time", e.time}, {"pos", vec3(e.position)}};
}

RunEvent event_from(const json& j) {
  const auto kind = run_event_kind_from(text(j, "kind"));
  if (!kind) fail(DecodeErrorCode::Malformed, "unknown event kind");
  return {*kind, number(j, "time"), vec3_from(j, "pos")};
}

std::uint32_t read_prefix(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

std::string_view unframe(std::string_view bytes) {
  if (bytes.size() < kLengthPrefixBytes) fail(DecodeErrorCode::Truncated, "frame shorter than its length prefix");
  const std::uint32_t len = read_prefix(reinterpret_cast<const unsigned char*>(bytes.data()));
  if (len > kMaxFrameBytes) {
    fail(DecodeErrorCode::TooLarge, "frame payload of " + std::to_string(len) + " bytes exceeds 64 KiB");
  }
  if (bytes.size() < kLengthPrefixBytes + len) {
    fail(DecodeErrorCode::Truncated, "frame announces " + std::to_string(len) + " bytes, got " +
                                         std::to_string(bytes.size() - kLengthPrefixBytes));
  }
  if (bytes.size() > kLengthPrefixBytes + len) fail(DecodeErrorCode::Malformed, "trailing bytes after frame");
  return bytes.substr(kLengthPrefixBytes, len);
}

}  // namespace

std::string_view to_string(DecodeErrorCode code) {
  switch (code) {
    case DecodeErrorCode::Truncated: return "truncated";
    case DecodeErrorCode::TooLarge: return "too_large";
    case DecodeErrorCode::Malformed: return "malformed";
    case DecodeErrorCode::UnsupportedVersion: return "unsupported_version";
    case DecodeErrorCode::UnknownKind: return "unknown_kind";
    case DecodeErrorCode::Range: return "range";
    case DecodeErrorCode::AxisCount: return "axis_count";
  }
  return "unknown";
}

std::string_view to_string(RunAction a) {
  switch (a) {
    case RunAction::Reset: return "reset";
    case RunAction::Pause: return "pause";
    case RunAction::Resume: return "resume";
  }
  return "unknown";
}

std::string_view to_string(InboundKind k) {
  switch (k) {
    case InboundKind::Hello: return "hello";
    case InboundKind::Keypoints: return "keypoints";
    case InboundKind::JoyAxes: return "joy_axes";
    case InboundKind::SetMode: return "set_mode";
    case InboundKind::RunControl: return "run_control";
    case InboundKind::TlxSubmit: return "tlx_submit";
  }
  return "unknown";
}

Hud hud_of(const VehicleState& state) {
  const Attitude a = attitude_of(state.orientation);
  return {a.yaw, a.roll, a.pitch, state.position.z(), state.velocity.norm()};
}

bool operator==(const TelemetrySnapshot& a, const TelemetrySnapshot& b) {
  return a.tick == b.tick && a.time == b.time && a.halted == b.halted && a.paused == b.paused &&
         a.armed == b.armed && a.mode == b.mode && a.state.position == b.state.position &&
         a.state.velocity == b.state.velocity &&
         a.state.orientation.coeffs() == b.state.orientation.coeffs() &&
         a.state.angular_rate == b.state.angular_rate && a.setpoints == b.setpoints &&
         a.reference == b.reference && a.events == b.events && a.hud == b.hud && a.hands == b.hands &&
         a.zone_digest == b.zone_digest && a.input_ack == b.input_ack &&
         a.collisions == b.collisions && a.traversal_time == b.traversal_time;
}

std::string to_json(const InboundMessage& msg) {
  json j = {{"v", kVersion}, {"kind", std::string(to_string(msg.kind()))}, {"seq", msg.seq},
            {"t", msg.client_time}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["version"] = p.version;
          j["client"] = p.client;
          j["token"] = p.token;
        } else if constexpr (std::is_same_v<T, Keypoints>) {
          json pts = json::array();
          for (std::size_t i = 0; i < kKeypointRows; ++i) {
            pts.push_back(p.frame.valid[i] ? point(p.frame.points[i]) : json(nullptr));
          }
          j["points"] = std::move(pts);
        } else if constexpr (std::is_same_v<T, JoyAxes>) {
          j["axes"] = p.axes;
        } else if constexpr (std::is_same_v<T, SetMode>) {
          j["mode"] = std::string(to_string(p.mode));
        } else if constexpr (std::is_same_v<T, RunControl>) {
          j["action"] = std::string(to_string(p.action));
        } else {
          j["participant"] = p.record.participant_id;
          j["modality"] = std::string(to_string(p.record.modality));
          json ratings = json::object();
          for (std::size_t i = 0; i < kSubscaleCount; ++i) {
            ratings[std::string(kSubscaleNames[i])] = p.record.ratings[i];
          }
          j["ratings"] = std::move(ratings);
        }
      },
      msg.payload);
  return j.dump();
}

InboundMessage inbound_from_json(std::string_view payload) {
  const json j = parse_object(payload);
  const std::string kind = text(j, "kind");
  InboundMessage msg;
  msg.seq = unsigned_number(j, "seq", 0);
  msg.client_time = j.contains("t") ? number(j, "t") : 0.0;
  if (!std::isfinite(msg.client_time)) fail(DecodeErrorCode::Malformed, "field 't' must be finite");

  if (kind == "hello") {
    Hello h;
    const json& v = field(j, "version");
    if (!v.is_number_integer()) fail(DecodeErrorCode::Malformed, "field 'version' must be an integer");
    h.version = v.get<int>();
    h.client = j.contains("client") ? text(j, "client") : std::string();
    h.token = j.contains("token") ? text(j, "token") : std::string();
    msg.payload = h;
  } else if (kind == "keypoints") {
    const json& pts = field(j, "points");
    if (!pts.is_array()) fail(DecodeErrorCode::Malformed, "field 'points' must be an array");
    if (pts.size() != kKeypointRows) {
      fail(DecodeErrorCode::Malformed, "keypoints need exactly 16 rows, got " + std::to_string(pts.size()));
    }
    Keypoints k;
    k.frame.timestamp = msg.client_time;
    for (std::size_t i = 0; i < kKeypointRows; ++i) {
      if (pts[i].is_null()) continue;
      const Point2 p = point_from(pts[i], "points");
      if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
        fail(DecodeErrorCode::Range, "keypoint row " + std::to_string(i) + " outside [0,1]");
      }
      k.frame.points[i] = p;
      k.frame.valid[i] = true;
    }
    msg.payload = k;
  } else if (kind == "joy_axes") {
    const json& axes = field(j, "axes");
    if (!axes.is_array()) fail(DecodeErrorCode::Malformed, "field 'axes' must be an array");
    if (axes.size() != 4) {
      fail(DecodeErrorCode::AxisCount, "joy_axes needs exactly 4 axes, got " + std::to_string(axes.size()));
    }
    msg.payload = JoyAxes{numbers<4>(axes, "axes")};
  } else if (kind == "set_mode") {
    const Modality m = mode_from(text(j, "mode"));
    if (m == Modality::Trace) fail(DecodeErrorCode::Malformed, "set_mode accepts pose or joystick");
    msg.payload = SetMode{m};
  } else if (kind == "run_control") {
    const std::string a = text(j, "action");
    RunControl rc;
    if (a == "reset") {
      rc.action = RunAction::Reset;
    } else if (a == "pause") {
      rc.action = RunAction::Pause;
    } else if (a == "resume") {
      rc.action = RunAction::Resume;
    } else {
      fail(DecodeErrorCode::Malformed, "unknown run_control action '" + a + "'");
    }
    msg.payload = rc;
  } else if (kind == "tlx_submit") {
    TlxSubmit t;
    t.record.participant_id = text(j, "participant");
    t.record.modality = mode_from(text(j, "modality"));
    const json& ratings = field(j, "ratings");
    if (!ratings.is_object()) fail(DecodeErrorCode::Malformed, "field 'ratings' must be an object");
    for (std::size_t i = 0; i < kSubscaleCount; ++i) {
      const std::string name(kSubscaleNames[i]);
      t.record.ratings[i] = number(ratings, name.c_str());
    }
    try {
      t.record.validate();
    } catch (const Error& e) {
      fail(DecodeErrorCode::Range, e.what());
    }
    msg.payload = t;
  } else {
    fail(DecodeErrorCode::UnknownKind,
         "unknown message kind '" + kind + "' for protocol version " + std::to_string(kVersion));
  }
  return msg;
}

std::string to_json(const OutboundMessage& msg) {
  json j;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Welcome>) {
          j = {{"v", kVersion}, {"kind", "welcome"}, {"version", m.version}, {"config", m.config},
               {"config_digest", m.config_digest}, {"zone_digest", m.zone_digest}, {"maze", m.maze}};
        } else if constexpr (std::is_same_v<T, ErrorReply>) {
          j = {{"v", kVersion}, {"kind", "error"}, {"code", m.code}, {"message", m.message}, {"seq", m.seq}};
        } else {
          const auto& s = m;
          json events = json::array();
          for (const auto& e : s.events) events.push_back(event_json(e));
          const auto& q = s.state.orientation;
          j = {{"v", kVersion},
               {"kind", "telemetry"},
               {"tick", s.tick},
               {"time", s.time},
               {"halted", s.halted},
               {"paused", s.paused},
               {"armed", s.armed},
               {"mode", std::string(to_string(s.mode))},
               {"pos", vec3(s.state.position)},
               {"vel", vec3(s.state.velocity)},
               {"q", json::array({q.w(), q.x(), q.y(), q.z()})},
               {"rate", vec3(s.state.angular_rate)},
               {"setpoints",
                {{"phi", s.setpoints.phi}, {"theta", s.setpoints.theta}, {"psi", s.setpoints.psi}, {"z", s.setpoints.z}}},
               {"reference", s.reference.as_array()},
               {"events", std::move(events)},
               {"hud",
                {{"yaw", s.hud.yaw}, {"roll", s.hud.roll}, {"pitch", s.hud.pitch}, {"height", s.hud.height},
                 {"speed", s.hud.speed}}},
               {"hands", s.hands ? json{{"left", point(s.hands->left)}, {"right", point(s.hands->right)}}
                                 : json(nullptr)},
               {"zone_digest", s.zone_digest},
               {"input_ack", s.input_ack},
               {"collisions", s.collisions},
               {"traversal_time", s.traversal_time ? json(*s.traversal_time) : json(nullptr)}};
        }
      },
      msg);
  return j.dump();
}

OutboundMessage outbound_from_json(std::string_view payload) {
  const json j = parse_object(payload);
  const std::string kind = text(j, "kind");
  if (kind == "welcome") {
    Welcome w;
    w.version = static_cast<int>(number(j, "version"));
    w.config = text(j, "config");
    w.config_digest = text(j, "config_digest");
    w.zone_digest = text(j, "zone_digest");
    w.maze = text(j, "maze");
    return w;
  }
  if (kind == "error") {
    return ErrorReply{text(j, "code"), text(j, "message"), unsigned_number(j, "seq", 0)};
  }
  if (kind != "telemetry") fail(DecodeErrorCode::UnknownKind, "unknown message kind '" + kind + "'");

  TelemetrySnapshot s;
  s.tick = unsigned_number(j, "tick", 0);
  s.time = number(j, "time");
  s.halted = boolean(j, "halted");
  s.paused = boolean(j, "paused");
  s.armed = boolean(j, "armed");
  s.mode = mode_from(text(j, "mode"));
  s.state.position = vec3_from(j, "pos");
  s.state.velocity = vec3_from(j, "vel");
  const auto q = numbers<4>(field(j, "q"), "q");
  s.state.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  s.state.angular_rate = vec3_from(j, "rate");
  const json& sp = field(j, "setpoints");
  s.setpoints = {number(sp, "phi"), number(sp, "theta"), number(sp, "psi"), number(sp, "z")};
  s.reference = ReferenceVector::from_array(numbers<4>(field(j, "reference"), "reference"));
  const json& events = field(j, "events");
  if (!events.is_array()) fail(DecodeErrorCode::Malformed, "field 'events' must be an array");
  for (const auto& e : events) s.events.push_back(event_from(e));
  const json& hud = field(j, "hud");
  s.hud = {number(hud, "yaw"), number(hud, "roll"), number(hud, "pitch"), number(hud, "height"),
           number(hud, "speed")};
  const json& hands = field(j, "hands");
  if (!hands.is_null()) s.hands = HandPair{point_from(field(hands, "left"), "left"), point_from(field(hands, "right"), "right")};
  s.zone_digest = text(j, "zone_digest");
  s.input_ack = unsigned_number(j, "input_ack", 0);
  s.collisions = static_cast<int>(number(j, "collisions"));
  const json& tt = field(j, "traversal_time");
  if (!tt.is_null()) s.traversal_time = number(j, "traversal_time");
  return s;
}

std::string frame(std::string_view payload) {
  const auto len = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(kLengthPrefixBytes + payload.size());
  out.push_back(static_cast<char>((len >> 24) & 0xFF));
  out.push_back(static_cast<char>((len >> 16) & 0xFF));
  out.push_back(static_cast<char>((len >> 8) & 0xFF));
  out.push_back(static_cast<char>(len & 0xFF));
  out.append(payload);
  return out;
}

std::string_view frame_payload(std::string_view bytes) { return unframe(bytes); }

InboundMessage decode(std::string_view bytes) { return inbound_from_json(unframe(bytes)); }

InboundMessage decode(std::span<const std::uint8_t> bytes) {
  return decode(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string encode(const InboundMessage& msg) { return frame(to_json(msg)); }

std::string snapshot_to_frame(const TelemetrySnapshot& snap) { return encode(OutboundMessage{snap}); }

std::string encode(const OutboundMessage& msg) { return frame(to_json(msg)); }

OutboundMessage decode_outbound(std::string_view bytes) { return outbound_from_json(unframe(bytes)); }

void FrameReader::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> FrameReader::next() {
  if (buffer_.size() < kLengthPrefixBytes) return std::nullopt;
  const std::uint32_t len = read_prefix(reinterpret_cast<const unsigned char*>(buffer_.data()));
  if (len > kMaxFrameBytes) {
    fail(DecodeErrorCode::TooLarge, "frame payload of " + std::to_string(len) + " bytes exceeds 64 KiB");
  }
  if (buffer_.size() < kLengthPrefixBytes + len) return std::nullopt;
  std::string payload = buffer_.substr(kLengthPrefixBytes, len);
  buffer_.erase(0, kLengthPrefixBytes + len);
  return payload;
}

}  // namespace teleop::protocol
