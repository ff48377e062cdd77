#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/config.hpp"
#include "teleop/mailbox.hpp"
#include "teleop/pose_input.hpp"
#include "teleop/protocol.hpp"
#include "teleop/refgen.hpp"
#include "teleop/run_log.hpp"
#include "teleop/vehicle.hpp"
#include "teleop/world.hpp"

namespace teleop {

/// Fixed-timestep closed loop: input selection, reference generation,
/// cascade control, rigid-body physics and run bookkeeping.
///
/// One call to tick() advances exactly one reference period on a logical
/// clock. The session is single-owner; it holds no locks.
class Session {
public:
  Session(Config config, Maze maze, std::string participant = {});

  /// Consumes the inputs gathered since the previous tick and advances one
  /// reference period (unless paused or halted).
  protocol::TelemetrySnapshot tick(const PendingInputs& inputs);

  /// Advances one reference period with an explicit reference. Used by
  /// replay; tick() funnels through it as well.
  protocol::TelemetrySnapshot advance(const ReferenceVector& reference, bool operator_reset);

  /// Snapshot of the current state with the reference and setpoints the next
  /// tick would apply if no newer input arrives. Does not change the session.
  [[nodiscard]] protocol::TelemetrySnapshot preview(const PendingInputs& inputs) const;

  /// Current state as a snapshot with no events.
  [[nodiscard]] protocol::TelemetrySnapshot snapshot() const;

  [[nodiscard]] const RunLog& log() const { return log_; }
  RunLogHeader& header() { return log_.header; }
  /// Marks the log complete and returns it.
  RunLog finish();

  /// TLX records submitted through the control plane since the last call.
  std::vector<TlxRecord> take_tlx();

  [[nodiscard]] const Config& config() const { return config_; }
  [[nodiscard]] const Maze& maze() const { return maze_; }
  [[nodiscard]] const VehicleState& state() const { return state_; }
  [[nodiscard]] const Setpoints& setpoints() const { return setpoints_; }
  [[nodiscard]] const RunTracker& tracker() const { return tracker_; }
  [[nodiscard]] Modality mode() const { return mode_; }
  [[nodiscard]] std::uint64_t ticks() const { return tick_; }
  [[nodiscard]] double time() const;
  [[nodiscard]] bool halted() const { return halted_; }
  [[nodiscard]] bool paused() const { return paused_; }
  [[nodiscard]] const std::string& fault() const { return fault_; }
  /// Physics steps and cascade evaluations executed so far.
  [[nodiscard]] std::uint64_t physics_steps() const { return physics_steps_; }
  [[nodiscard]] std::uint64_t cascade_steps() const { return cascade_steps_; }

private:
  struct InputState {
    AveragingFilter filter;
    ReferenceGenerator refgen;
    std::optional<ReferenceVector> held;
    std::uint64_t held_tick = 0;  // tick index at which `held` was fresh
    std::optional<HandPair> hands;
  };

  /// Applies the modality rules to the pending data-plane inputs. Mutates
  /// only `in`, so preview() can run it on a copy.
  ReferenceVector select_reference(InputState& in, const PendingInputs& inputs, Modality mode) const;
  void reset_vehicle();
  protocol::TelemetrySnapshot make_snapshot(std::vector<RunEvent> events) const;

  Config config_;
  Maze maze_;
  CascadeController controller_;
  RunTracker tracker_;
  InputState input_;
  VehicleState state_;
  Setpoints setpoints_;
  ReferenceVector reference_;
  Modality mode_;
  std::uint64_t tick_ = 0;
  std::uint64_t input_ack_ = 0;
  std::uint64_t physics_steps_ = 0;
  std::uint64_t cascade_steps_ = 0;
  bool halted_ = false;
  bool paused_ = false;
  bool reset_pending_ = false;
  std::string fault_;
  std::string zone_digest_;
  RunLog log_;
  std::vector<TlxRecord> tlx_;
};

/// Hex SHA-256 of a maze document, used as the maze id in log headers.
std::string maze_id(const Maze& maze);

struct ReplayResult {
  std::vector<TickRecord> records;  // re-simulated
  std::vector<LoggedEvent> events;
  std::size_t compared = 0;
  /// Largest absolute difference over position, velocity, orientation and
  /// angular rate across all compared records.
  double max_deviation = 0.0;
  bool bit_identical = true;
  std::optional<std::uint64_t> first_mismatch;  // tick
  bool truncated = false;  // the log had no end marker
};

/// Re-simulates a log from its recorded references. Throws DigestMismatch if
/// the header does not match `config` or `maze`.
ReplayResult replay(const RunLog& log, const Config& config, const Maze& maze);

/// Parses a trace document: one wire-format message per line, `#` comments
/// and blank lines allowed, times non-decreasing. Throws Schema naming the line.
std::vector<protocol::InboundMessage> parse_trace(std::string_view text);

struct HeadlessOptions {
  double duration = 60.0;  // simulated seconds
  bool stop_on_finish = false;
  std::string participant;
};

struct HeadlessResult {
  RunLog log;
  protocol::TelemetrySnapshot last;
  bool halted = false;
  std::string fault;
};

/// Runs a trace against the logical clock: before tick k (starting at time
/// k*T) every message with t <= k*T is posted to the mailbox.
HeadlessResult run_headless(const Config& config, const Maze& maze,
                            const std::vector<protocol::InboundMessage>& trace,
                            const HeadlessOptions& options = {});

/// One-line JSON summary of a headless run.
std::string summary_json(const HeadlessResult& result);

}  // namespace teleop
