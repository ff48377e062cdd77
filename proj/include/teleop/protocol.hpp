#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "teleop/metrics.hpp"
#include "teleop/modality.hpp"
#include "teleop/pose_input.hpp"
#include "teleop/refgen.hpp"
#include "teleop/vehicle.hpp"
#include "teleop/world.hpp"

namespace teleop::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;  // payload limit
inline constexpr std::size_t kLengthPrefixBytes = 4;

enum class DecodeErrorCode {
  Truncated,           // fewer bytes than the length prefix announces
  TooLarge,            // announced payload beyond kMaxFrameBytes
  Malformed,           // not JSON, missing or mistyped field
  UnsupportedVersion,  // "v" other than kVersion
  UnknownKind,
  Range,               // keypoint coordinate outside [0,1] or rating outside [0,20]
  AxisCount,           // joy_axes without exactly 4 values
};

std::string_view to_string(DecodeErrorCode code);

class DecodeError : public std::runtime_error {
public:
  DecodeError(DecodeErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  [[nodiscard]] DecodeErrorCode code() const noexcept { return code_; }

private:
  DecodeErrorCode code_;
};

// ---- client -> server ------------------------------------------------------

struct Hello {
  int version = kVersion;
  std::string client;
  std::string token;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct Keypoints {
  KeypointFrame frame;  // frame.timestamp mirrors the message time
  friend bool operator==(const Keypoints&, const Keypoints&) = default;
};

struct JoyAxes {
  std::array<double, 4> axes{};
  friend bool operator==(const JoyAxes&, const JoyAxes&) = default;
};

struct SetMode {
  Modality mode = Modality::Joystick;
  friend bool operator==(const SetMode&, const SetMode&) = default;
};

enum class RunAction { Reset, Pause, Resume };
std::string_view to_string(RunAction a);

struct RunControl {
  RunAction action = RunAction::Reset;
  friend bool operator==(const RunControl&, const RunControl&) = default;
};

struct TlxSubmit {
  TlxRecord record;
  friend bool operator==(const TlxSubmit&, const TlxSubmit&) = default;
};

enum class InboundKind { Hello, Keypoints, JoyAxes, SetMode, RunControl, TlxSubmit };
std::string_view to_string(InboundKind k);

struct InboundMessage {
  std::uint64_t seq = 0;     // client sequence number, echoed as input_ack
  double client_time = 0.0;  // s, client clock
  std::variant<Hello, Keypoints, JoyAxes, SetMode, RunControl, TlxSubmit> payload;

  [[nodiscard]] InboundKind kind() const { return static_cast<InboundKind>(payload.index()); }
  friend bool operator==(const InboundMessage&, const InboundMessage&) = default;
};

// ---- server -> client ------------------------------------------------------

struct Hud {
  double yaw = 0.0;    // compass, rad
  double roll = 0.0;   // horizon bank, rad
  double pitch = 0.0;  // horizon pitch, rad
  double height = 0.0; // m
  double speed = 0.0;  // m/s, linear
  friend bool operator==(const Hud&, const Hud&) = default;
};

/// HUD fields derived from vehicle state only.
Hud hud_of(const VehicleState& state);

struct TelemetrySnapshot {
  std::uint64_t tick = 0;
  double time = 0.0;
  bool halted = false;
  bool paused = false;
  bool armed = false;
  Modality mode = Modality::Joystick;
  VehicleState state;
  Setpoints setpoints;
  ReferenceVector reference;
  std::vector<RunEvent> events;  // since the previous snapshot
  Hud hud;
  std::optional<HandPair> hands;  // filtered wrists for the pose overlay
  std::string zone_digest;
  std::uint64_t input_ack = 0;  // highest input seq reflected in this snapshot
  int collisions = 0;
  std::optional<double> traversal_time;

  friend bool operator==(const TelemetrySnapshot& a, const TelemetrySnapshot& b);
};

struct Welcome {
  int version = kVersion;
  std::string config;  // canonical config document
  std::string config_digest;
  std::string zone_digest;
  std::string maze;    // map document
  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct ErrorReply {
  std::string code;
  std::string message;
  std::uint64_t seq = 0;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using OutboundMessage = std::variant<Welcome, TelemetrySnapshot, ErrorReply>;

// ---- framing ---------------------------------------------------------------

/// JSON text of a message (no length prefix). Trace files use this form.
std::string to_json(const InboundMessage& msg);
std::string to_json(const OutboundMessage& msg);

/// Parses JSON text of a client message; throws DecodeError.
InboundMessage inbound_from_json(std::string_view json);
OutboundMessage outbound_from_json(std::string_view json);

/// 4-byte big-endian payload length followed by the JSON payload.
std::string frame(std::string_view payload);

/// Payload of exactly one length-prefixed frame; throws DecodeError.
std::string_view frame_payload(std::string_view bytes);
/// Decodes exactly one length-prefixed frame.
InboundMessage decode(std::span<const std::uint8_t> bytes);
InboundMessage decode(std::string_view bytes);
std::string encode(const InboundMessage& msg);

std::string snapshot_to_frame(const TelemetrySnapshot& snap);
std::string encode(const OutboundMessage& msg);
OutboundMessage decode_outbound(std::string_view bytes);

/// Splits a byte stream into frames. Throws DecodeError(TooLarge) as soon
/// as a prefix announces an oversized payload.
class FrameReader {
public:
  void feed(std::string_view bytes);
  /// Next complete payload (without prefix), if any.
  std::optional<std::string> next();
  [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }

private:
  std::string buffer_;
};

}  // namespace teleop::protocol
