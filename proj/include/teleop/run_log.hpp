#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/refgen.hpp"
#include "teleop/vehicle.hpp"
#include "teleop/world.hpp"

namespace teleop {

inline constexpr int kLogSchemaVersion = 1;

struct RunLogHeader {
  int schema = kLogSchemaVersion;
  std::string config_digest;
  std::string modality;
  std::string maze_id;           // SHA-256 of the map document
  std::string start_wall_clock;  // "headless" for logical-clock runs
  std::string participant;       // optional, used by reports
  double reference_rate = 20.0;

  friend bool operator==(const RunLogHeader&, const RunLogHeader&) = default;
};

/// One reference tick: the reference applied, the resulting setpoints, and
/// the vehicle state at the end of the tick.
struct TickRecord {
  std::uint64_t tick = 0;
  ReferenceVector reference;
  Setpoints setpoints;
  VehicleState state;
  bool operator_reset = false;  // an operator reset was applied before this tick
};

bool operator==(const TickRecord& a, const TickRecord& b);

struct LoggedEvent {
  std::uint64_t tick = 0;  // tick during which the event fired
  RunEvent event;
  friend bool operator==(const LoggedEvent&, const LoggedEvent&) = default;
};

struct RunLog {
  RunLogHeader header;
  std::vector<TickRecord> records;
  std::vector<LoggedEvent> events;
  bool complete = true;  // false when the end marker was missing on import

  friend bool operator==(const RunLog&, const RunLog&) = default;
};

enum class LogFormat {
  Jsonl,  // line-delimited structured records (native)
  Table,  // whitespace-separated text table
};

LogFormat log_format_from(std::string_view name);  // "jsonl" | "table"

std::string export_log(const RunLog& log, LogFormat format);
/// Parses either format (detected from the first line). A missing end marker
/// or a cut-off last line yields complete = false; other defects throw Schema
/// naming the line.
RunLog import_log(std::string_view text);

/// Incremental writer for live runs: header first, then one line per record
/// or event, end marker on finish().
class JsonlLogWriter {
public:
  static std::string header_line(const RunLogHeader& h);
  static std::string record_line(const TickRecord& r);
  static std::string event_line(const LoggedEvent& e);
  static std::string end_line(std::size_t ticks);
};

}  // namespace teleop
