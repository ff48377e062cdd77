#include "teleop/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "json.hpp"
#include "teleop/digest.hpp"
#include "teleop/error.hpp"

namespace teleop {
namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

template <typename Vec>
bool same_bits(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

template <typename Vec>
double max_abs_diff(const Vec& a, const Vec& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

ReferenceVector scaled(const ReferenceVector& r, double k) {
  return {r.r1 * k, r.r2 * k, r.r3 * k, r.r4 * k};
}

}  // namespace

std::string maze_id(const Maze& maze) { return sha256_hex(maze.source_text); }

Session::Session(Config config, Maze maze, std::string participant)
    : config_(std::move(config)),
      maze_(std::move(maze)),
      controller_(config_.cascade, config_.vehicle),
      tracker_(config_.collision_radius),
      input_{AveragingFilter(config_.filter_window), ReferenceGenerator(config_.zone1, config_.zone2, config_.mapping),
             std::nullopt, 0, std::nullopt},
      mode_(config_.modality) {
  config_.validate();
  zone_digest_ = config_.zone_digest();
  reset_vehicle();
  log_.header.config_digest = config_.digest();
  log_.header.modality = std::string(to_string(config_.modality));
  log_.header.maze_id = maze_id(maze_);
  log_.header.start_wall_clock = "headless";
  log_.header.participant = std::move(participant);
  log_.header.reference_rate = config_.reference_rate;
  log_.complete = false;
}

double Session::time() const { return static_cast<double>(tick_) * config_.reference_period(); }

void Session::reset_vehicle() {
  state_ = VehicleState::at_rest(maze_.spawn_position, maze_.spawn_yaw);
  setpoints_ = Setpoints{0.0, 0.0, maze_.spawn_yaw, maze_.spawn_position.z()};
  reference_ = {};
  controller_.reset();
}

ReferenceVector Session::select_reference(InputState& in, const PendingInputs& inputs, Modality mode) const {
  const bool use_pose = mode == Modality::Pose || mode == Modality::Trace;
  const bool use_joy = mode == Modality::Joystick || mode == Modality::Trace;
  std::optional<ReferenceVector> fresh;

  if (use_pose && inputs.keypoints) {
    const auto& frame = std::get<protocol::Keypoints>(inputs.keypoints->payload).frame;
    try {
      const FilteredPose pose = in.filter.push(frame);
      const HandPair hands = extract_hands(pose);
      in.hands = hands;
      ReferenceVector r = in.refgen.update(hands);
      const auto& s = config_.pose_sign;
      fresh = ReferenceVector{r.r1 * s[0], r.r2 * s[1], r.r3 * s[2], r.r4 * s[3]};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingHand && e.code() != ErrorCode::RejectedFrame) throw;
      in.hands.reset();
    }
  }
  if (use_joy && inputs.joy_axes) {
    const auto& axes = std::get<protocol::JoyAxes>(inputs.joy_axes->payload).axes;
    try {
      fresh = joy_to_reference(axes, config_.joy_map);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidInput) throw;
    }
  }

  if (fresh) {
    in.held = *fresh;
    in.held_tick = tick_;
    return *fresh;
  }
  if (!in.held) return {};
  const double age = static_cast<double>(tick_ - in.held_tick) * config_.reference_period();
  if (age <= config_.hold_timeout) return *in.held;
  const double into_decay = age - config_.hold_timeout;
  if (into_decay < config_.decay_time) return scaled(*in.held, 1.0 - into_decay / config_.decay_time);
  return {};
}

protocol::TelemetrySnapshot Session::tick(const PendingInputs& inputs) {
  input_ack_ = std::max(input_ack_, inputs.max_seq());
  if (halted_) return snapshot();

  for (const auto& msg : inputs.control) {
    if (const auto* rc = std::get_if<protocol::RunControl>(&msg.payload)) {
      switch (rc->action) {
        case protocol::RunAction::Reset:
          reset_pending_ = true;
          input_.filter.reset();
          input_.refgen.reset();
          input_.held.reset();
          input_.hands.reset();
          break;
        case protocol::RunAction::Pause:
          paused_ = true;
          break;
        case protocol::RunAction::Resume:
          paused_ = false;
          break;
      }
    } else if (const auto* sm = std::get_if<protocol::SetMode>(&msg.payload)) {
      if (sm->mode != mode_) {
        mode_ = sm->mode;
        input_.filter.reset();
        input_.hands.reset();
        input_.held.reset();
      }
    } else if (const auto* tlx = std::get_if<protocol::TlxSubmit>(&msg.payload)) {
      try {
        tlx->record.validate();
        tlx_.push_back(tlx->record);
      } catch (const Error&) {
        // the decoder already range-checks; anything else is dropped
      }
    }
  }
  if (paused_) return snapshot();

  const ReferenceVector r = select_reference(input_, inputs, mode_);
  const bool reset = reset_pending_;
  reset_pending_ = false;
  return advance(r, reset);
}

protocol::TelemetrySnapshot Session::advance(const ReferenceVector& reference, bool operator_reset) {
  if (halted_) return snapshot();
  std::vector<RunEvent> events;
  const double period = config_.reference_period();
  const double cascade_dt = config_.cascade_period();
  const int cascades = config_.cascades_per_reference();
  const int steps = config_.physics_steps_per_cascade();
  const double ground = maze_.origin.z();

  if (operator_reset) {
    reset_vehicle();
    events.push_back(tracker_.reset(state_.position, static_cast<double>(tick_) * period));
  }
  reference_ = reference;
  setpoints_ = integrate_setpoints(setpoints_, reference, config_.scaling);

  try {
    for (int c = 0; c < cascades; ++c) {
      const BodyCommand cmd = controller_.update(state_, setpoints_, cascade_dt);
      ++cascade_steps_;
      for (int p = 0; p < steps; ++p) {
        state_ = dynamics_step(state_, cmd, config_.vehicle, config_.physics_dt);
        ++physics_steps_;
        if (config_.ground_contact && state_.position.z() < ground) {
          state_.position.z() = ground;
          state_.velocity.z() = std::max(state_.velocity.z(), 0.0);
        }
      }
      const double t =
          static_cast<double>(tick_ * static_cast<std::uint64_t>(cascades) + static_cast<std::uint64_t>(c) + 1) *
          cascade_dt;
      for (const RunEvent& e : tracker_.advance(maze_, state_.position, t)) {
        events.push_back(e);
        if (e.kind == RunEventKind::Collision && config_.reset_on_collision) {
          reset_vehicle();
          events.push_back(tracker_.reset(state_.position, t));
          break;
        }
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Fault) throw;
    halted_ = true;
    fault_ = e.what();
    auto snap = make_snapshot(std::move(events));
    return snap;
  }

  ++tick_;
  log_.records.push_back({tick_, reference_, setpoints_, state_, operator_reset});
  for (const RunEvent& e : events) log_.events.push_back({tick_, e});
  return make_snapshot(std::move(events));
}

protocol::TelemetrySnapshot Session::make_snapshot(std::vector<RunEvent> events) const {
  protocol::TelemetrySnapshot s;
  s.tick = tick_;
  s.time = time();
  s.halted = halted_;
  s.paused = paused_;
  s.armed = input_.refgen.armed();
  s.mode = mode_;
  s.state = state_;
  s.setpoints = setpoints_;
  s.reference = reference_;
  s.events = std::move(events);
  s.hud = protocol::hud_of(state_);
  if (mode_ != Modality::Joystick) s.hands = input_.hands;
  s.zone_digest = zone_digest_;
  s.input_ack = input_ack_;
  s.collisions = tracker_.collision_count();
  s.traversal_time = tracker_.traversal_time();
  return s;
}

protocol::TelemetrySnapshot Session::snapshot() const { return make_snapshot({}); }

protocol::TelemetrySnapshot Session::preview(const PendingInputs& inputs) const {
  protocol::TelemetrySnapshot s = snapshot();
  s.input_ack = std::max(input_ack_, inputs.max_seq());
  if (halted_ || paused_) return s;
  Modality mode = mode_;
  InputState copy = input_;
  for (const auto& msg : inputs.control) {
    if (const auto* sm = std::get_if<protocol::SetMode>(&msg.payload)) mode = sm->mode;
  }
  const ReferenceVector r = select_reference(copy, inputs, mode);
  s.mode = mode;
  s.reference = r;
  s.setpoints = integrate_setpoints(setpoints_, r, config_.scaling);
  s.armed = copy.refgen.armed();
  s.hands = mode == Modality::Joystick ? std::nullopt : copy.hands;
  return s;
}

RunLog Session::finish() {
  log_.complete = true;
  return log_;
}

std::vector<TlxRecord> Session::take_tlx() {
  std::vector<TlxRecord> out;
  out.swap(tlx_);
  return out;
}

ReplayResult replay(const RunLog& log, const Config& config, const Maze& maze) {
  if (log.header.config_digest != config.digest()) {
    throw Error(ErrorCode::DigestMismatch, "log was recorded with a different configuration (digest " +
                                               log.header.config_digest + ", supplied " + config.digest() + ")");
  }
  if (log.header.maze_id != maze_id(maze)) {
    throw Error(ErrorCode::DigestMismatch, "log was recorded on a different maze");
  }
  Session session(config, maze, log.header.participant);
  ReplayResult result;
  result.truncated = !log.complete;
  for (const TickRecord& rec : log.records) {
    if (rec.tick != session.ticks() + 1) {
      throw Error(ErrorCode::Schema, "log ticks are not consecutive at tick " + std::to_string(rec.tick));
    }
    session.advance(rec.reference, rec.operator_reset);
    if (session.halted()) {
      result.bit_identical = false;
      if (!result.first_mismatch) result.first_mismatch = rec.tick;
      break;
    }
    const VehicleState& a = session.log().records.back().state;
    const VehicleState& b = rec.state;
    ++result.compared;
    const double dev = std::max({max_abs_diff(a.position, b.position), max_abs_diff(a.velocity, b.velocity),
                                 max_abs_diff(a.orientation.coeffs(), b.orientation.coeffs()),
                                 max_abs_diff(a.angular_rate, b.angular_rate)});
    result.max_deviation = std::max(result.max_deviation, dev);
    const bool same = same_bits(a.position, b.position) && same_bits(a.velocity, b.velocity) &&
                      same_bits(a.orientation.coeffs(), b.orientation.coeffs()) &&
                      same_bits(a.angular_rate, b.angular_rate);
    if (!same) {
      result.bit_identical = false;
      if (!result.first_mismatch) result.first_mismatch = rec.tick;
    }
  }
  result.records = session.log().records;
  result.events = session.log().events;
  return result;
}

std::vector<protocol::InboundMessage> parse_trace(std::string_view text) {
  std::vector<protocol::InboundMessage> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    protocol::InboundMessage msg;
    try {
      msg = protocol::inbound_from_json(line);
    } catch (const protocol::DecodeError& e) {
      throw Error(ErrorCode::Schema, "trace line " + std::to_string(line_no) + ": " +
                                         std::string(protocol::to_string(e.code())) + ": " + e.what());
    }
    if (!std::isfinite(msg.client_time)) {
      throw Error(ErrorCode::Schema, "trace line " + std::to_string(line_no) + ": time is not finite");
    }
    if (!out.empty() && msg.client_time < out.back().client_time) {
      throw Error(ErrorCode::Schema, "trace line " + std::to_string(line_no) + ": time goes backwards");
    }
    out.push_back(std::move(msg));
  }
  return out;
}

HeadlessResult run_headless(const Config& config, const Maze& maze,
                            const std::vector<protocol::InboundMessage>& trace, const HeadlessOptions& options) {
  if (!(options.duration >= 0.0) || !std::isfinite(options.duration)) {
    throw Error(ErrorCode::Validation, "duration must be a finite non-negative number of seconds");
  }
  Session session(config, maze, options.participant);
  const double period = config.reference_period();
  const auto ticks = static_cast<std::uint64_t>(std::llround(options.duration / period));
  Mailbox box;
  std::size_t next = 0;
  HeadlessResult result;
  result.last = session.snapshot();
  for (std::uint64_t k = 0; k < ticks; ++k) {
    const double start = static_cast<double>(k) * period;
    while (next < trace.size() && trace[next].client_time <= start + 1e-9) box.post(trace[next++]);
    result.last = session.tick(box.drain());
    if (session.halted()) break;
    if (options.stop_on_finish && session.tracker().finished()) break;
  }
  result.halted = session.halted();
  result.fault = session.fault();
  result.log = session.finish();
  return result;
}

std::string summary_json(const HeadlessResult& result) {
  using ojson = nlohmann::ordered_json;
  const auto& s = result.last;
  const Attitude att = attitude_of(s.state.orientation);
  ojson j;
  j["ticks"] = result.log.records.size();
  j["time"] = s.time;
  j["halted"] = result.halted;
  if (result.halted) j["fault"] = result.fault;
  j["finished"] = s.traversal_time.has_value();
  j["traversal_time"] = s.traversal_time ? ojson(*s.traversal_time) : ojson(nullptr);
  j["collisions"] = s.collisions;
  const auto& p = s.state.position;
  const auto& v = s.state.velocity;
  j["position"] = {p.x(), p.y(), p.z()};
  j["velocity"] = {v.x(), v.y(), v.z()};
  j["attitude"] = {{"roll", att.roll}, {"pitch", att.pitch}, {"yaw", att.yaw}};
  j["setpoints"] = {{"phi", s.setpoints.phi}, {"theta", s.setpoints.theta}, {"psi", s.setpoints.psi},
                    {"z", s.setpoints.z}};
  return j.dump();
}

}  // namespace teleop
