#include "teleop/run_log.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "teleop/digest.hpp"
#include "teleop/error.hpp"

namespace teleop {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kTableColumns =
    "tick r1 r2 r3 r4 phi theta psi z px py pz vx vy vz qw qx qy qz wx wy wz reset";

[[noreturn]] void log_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::Schema, "log line " + std::to_string(line) + ": " + msg);
}

struct Lines {
  std::vector<std::string_view> lines;
  bool last_unterminated = false;
};

Lines split_lines(std::string_view text) {
  Lines out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.lines.push_back(text.substr(pos));
      out.last_unterminated = true;
      break;
    }
    out.lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

ojson vec3(const Eigen::Vector3d& v) { return ojson::array({v.x(), v.y(), v.z()}); }

template <std::size_t N>
std::array<double, N> nums(const ojson& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != N) {
    throw std::invalid_argument(std::string("field '") + key + "' must hold " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(*it)[i].is_number()) throw std::invalid_argument(std::string("field '") + key + "' must hold numbers");
    out[i] = (*it)[i].get<double>();
  }
  return out;
}

Eigen::Vector3d to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

TickRecord record_from_values(std::uint64_t tick, const std::array<double, 4>& r,
                              const std::array<double, 4>& sp, const std::array<double, 3>& pos,
                              const std::array<double, 3>& vel, const std::array<double, 4>& q,
                              const std::array<double, 3>& w, bool reset) {
  TickRecord rec;
  rec.tick = tick;
  rec.reference = ReferenceVector::from_array(r);
  rec.setpoints = {sp[0], sp[1], sp[2], sp[3]};
  rec.state.position = to_vec3(pos);
  rec.state.velocity = to_vec3(vel);
  rec.state.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  rec.state.angular_rate = to_vec3(w);
  rec.operator_reset = reset;
  return rec;
}

void check_tick_order(const RunLog& log, std::uint64_t tick, std::size_t line) {
  if (!log.records.empty() && tick <= log.records.back().tick) {
    log_error(line, "ticks must be strictly increasing");
  }
}

RunLog import_jsonl(const Lines& in) {
  RunLog log;
  log.complete = false;
  bool have_header = false;
  for (std::size_t i = 0; i < in.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = in.lines[i];
    if (line.empty()) continue;
    const bool last = i + 1 == in.lines.size();
    ojson j = ojson::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      if (last && in.last_unterminated) break;  // cut off mid-write
      log_error(line_no, "not a JSON object");
    }
    if (log.complete) log_error(line_no, "content after end marker");
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) log_error(line_no, "duplicate header");
        have_header = true;
        auto& h = log.header;
        h.schema = j.at("schema").get<int>();
        if (h.schema != kLogSchemaVersion) {
          log_error(line_no, "unsupported log schema " + std::to_string(h.schema));
        }
        h.config_digest = j.at("config_digest").get<std::string>();
        h.modality = j.at("modality").get<std::string>();
        h.maze_id = j.at("maze_id").get<std::string>();
        h.start_wall_clock = j.at("start_wall_clock").get<std::string>();
        h.participant = j.at("participant").get<std::string>();
        h.reference_rate = j.at("reference_rate").get<double>();
        continue;
      }
      if (!have_header) log_error(line_no, "record before header");
      if (type == "tick") {
        const auto tick = j.at("tick").get<std::uint64_t>();
        check_tick_order(log, tick, line_no);
        log.records.push_back(record_from_values(tick, nums<4>(j, "r"), nums<4>(j, "sp"), nums<3>(j, "pos"),
                                                 nums<3>(j, "vel"), nums<4>(j, "q"), nums<3>(j, "w"),
                                                 j.at("reset").get<bool>()));
      } else if (type == "event") {
        const auto kind = run_event_kind_from(j.at("kind").get<std::string>());
        if (!kind) log_error(line_no, "unknown event kind");
        log.events.push_back(
            {j.at("tick").get<std::uint64_t>(), {*kind, j.at("time").get<double>(), to_vec3(nums<3>(j, "pos"))}});
      } else if (type == "end") {
        if (j.at("ticks").get<std::uint64_t>() != log.records.size()) {
          log_error(line_no, "end marker tick count does not match the records");
        }
        log.complete = true;
      } else {
        log_error(line_no, "unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      log_error(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      log_error(line_no, e.what());
    }
  }
  if (!have_header) log_error(1, "missing header");
  return log;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    const std::size_t end = std::min(line.find(' ', pos), line.size());
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) log_error(line, "bad number '" + std::string(s) + "'");
  return v;
}

std::uint64_t to_u64(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) log_error(line, "bad integer '" + std::string(s) + "'");
  return v;
}

RunLog import_table(const Lines& in) {
  RunLog log;
  log.complete = false;
  enum class Section { Header, Ticks, Events } section = Section::Header;
  for (std::size_t i = 0; i < in.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = in.lines[i];
    const bool last = i + 1 == in.lines.size();
    if (line.empty()) continue;
    if (log.complete) log_error(line_no, "content after end marker");

    if (line.starts_with("# ")) {
      const std::string_view body = line.substr(2);
      const auto sp = body.find(' ');
      const std::string_view key = body.substr(0, sp);
      const std::string_view value = sp == std::string_view::npos ? std::string_view() : body.substr(sp + 1);
      if (key == "end") {
        if (to_u64(value, line_no) != log.records.size()) log_error(line_no, "end marker tick count mismatch");
        log.complete = true;
      } else if (key == "events") {
        section = Section::Events;
      } else if (section == Section::Header) {
        auto& h = log.header;
        if (key == "schema") {
          h.schema = static_cast<int>(to_u64(value, line_no));
          if (h.schema != kLogSchemaVersion) log_error(line_no, "unsupported log schema");
        } else if (key == "config_digest") {
          h.config_digest = std::string(value);
        } else if (key == "modality") {
          h.modality = std::string(value);
        } else if (key == "maze_id") {
          h.maze_id = std::string(value);
        } else if (key == "start_wall_clock") {
          h.start_wall_clock = std::string(value);
        } else if (key == "participant") {
          h.participant = std::string(value);
        } else if (key == "reference_rate") {
          h.reference_rate = to_double(value, line_no);
        }
      }
      continue;
    }
    if (line.front() == '#') continue;
    if (line == kTableColumns) {
      section = Section::Ticks;
      continue;
    }

    const auto f = fields_of(line);
    if (section == Section::Ticks) {
      if (f.size() != 23) {
        if (last && in.last_unterminated) break;
        log_error(line_no, "expected 23 columns, got " + std::to_string(f.size()));
      }
      std::array<double, 21> v{};
      for (std::size_t k = 0; k < 21; ++k) v[k] = to_double(f[k + 1], line_no);
      const auto tick = to_u64(f[0], line_no);
      check_tick_order(log, tick, line_no);
      log.records.push_back(record_from_values(tick, {v[0], v[1], v[2], v[3]}, {v[4], v[5], v[6], v[7]},
                                               {v[8], v[9], v[10]}, {v[11], v[12], v[13]},
                                               {v[14], v[15], v[16], v[17]}, {v[18], v[19], v[20]},
                                               f[22] == "1"));
    } else if (section == Section::Events) {
      if (f.size() != 6) {
        if (last && in.last_unterminated) break;
        log_error(line_no, "expected 6 event columns");
      }
      const auto kind = run_event_kind_from(f[1]);
      if (!kind) log_error(line_no, "unknown event kind");
      log.events.push_back({to_u64(f[0], line_no),
                            {*kind, to_double(f[2], line_no),
                             {to_double(f[3], line_no), to_double(f[4], line_no), to_double(f[5], line_no)}}});
    } else {
      log_error(line_no, "data before the column header");
    }
  }
  return log;
}

std::string join(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

}  // namespace

bool operator==(const TickRecord& a, const TickRecord& b) {
  return a.tick == b.tick && a.reference == b.reference && a.setpoints == b.setpoints &&
         a.state.position == b.state.position && a.state.velocity == b.state.velocity &&
         a.state.orientation.coeffs() == b.state.orientation.coeffs() &&
         a.state.angular_rate == b.state.angular_rate && a.operator_reset == b.operator_reset;
}

LogFormat log_format_from(std::string_view name) {
  if (name == "jsonl") return LogFormat::Jsonl;
  if (name == "table") return LogFormat::Table;
  throw Error(ErrorCode::Config, "unknown log format '" + std::string(name) + "' (jsonl or table)");
}

std::string JsonlLogWriter::header_line(const RunLogHeader& h) {
  ojson j = {{"type", "header"},          {"schema", h.schema},
             {"config_digest", h.config_digest}, {"modality", h.modality},
             {"maze_id", h.maze_id},      {"start_wall_clock", h.start_wall_clock},
             {"participant", h.participant}, {"reference_rate", h.reference_rate}};
  return j.dump() + "\n";
}

std::string JsonlLogWriter::record_line(const TickRecord& r) {
  const auto& q = r.state.orientation;
  ojson j = {{"type", "tick"},
             {"tick", r.tick},
             {"r", r.reference.as_array()},
             {"sp", ojson::array({r.setpoints.phi, r.setpoints.theta, r.setpoints.psi, r.setpoints.z})},
             {"pos", vec3(r.state.position)},
             {"vel", vec3(r.state.velocity)},
             {"q", ojson::array({q.w(), q.x(), q.y(), q.z()})},
             {"w", vec3(r.state.angular_rate)},
             {"reset", r.operator_reset}};
  return j.dump() + "\n";
}

std::string JsonlLogWriter::event_line(const LoggedEvent& e) {
  ojson j = {{"type", "event"},
             {"tick", e.tick},
             {"kind", std::string(to_string(e.event.kind))},
             {"time", e.event.time},
             {"pos", vec3(e.event.position)}};
  return j.dump() + "\n";
}

std::string JsonlLogWriter::end_line(std::size_t ticks) {
  return ojson{{"type", "end"}, {"ticks", ticks}}.dump() + "\n";
}

std::string export_log(const RunLog& log, LogFormat format) {
  std::string out;
  if (format == LogFormat::Jsonl) {
    out += JsonlLogWriter::header_line(log.header);
    std::size_t next_event = 0;
    for (const auto& r : log.records) {
      out += JsonlLogWriter::record_line(r);
      while (next_event < log.events.size() && log.events[next_event].tick <= r.tick) {
        out += JsonlLogWriter::event_line(log.events[next_event++]);
      }
    }
    while (next_event < log.events.size()) out += JsonlLogWriter::event_line(log.events[next_event++]);
    if (log.complete) out += JsonlLogWriter::end_line(log.records.size());
    return out;
  }

  const auto& h = log.header;
  out += "# uav-teleop run log\n";
  out += "# schema " + std::to_string(h.schema) + "\n";
  out += "# config_digest " + h.config_digest + "\n";
  out += "# modality " + h.modality + "\n";
  out += "# maze_id " + h.maze_id + "\n";
  out += "# start_wall_clock " + h.start_wall_clock + "\n";
  out += "# participant " + h.participant + "\n";
  out += "# reference_rate " + format_double(h.reference_rate) + "\n";
  out += std::string(kTableColumns) + "\n";
  for (const auto& r : log.records) {
    const auto& s = r.state;
    const auto& q = s.orientation;
    out += std::to_string(r.tick) + " " +
           join({r.reference.r1, r.reference.r2, r.reference.r3, r.reference.r4, r.setpoints.phi,
                 r.setpoints.theta, r.setpoints.psi, r.setpoints.z, s.position.x(), s.position.y(),
                 s.position.z(), s.velocity.x(), s.velocity.y(), s.velocity.z(), q.w(), q.x(), q.y(), q.z(),
                 s.angular_rate.x(), s.angular_rate.y(), s.angular_rate.z()}) +
           (r.operator_reset ? " 1" : " 0") + "\n";
  }
  out += "# events\n";
  out += "#tick kind time px py pz\n";
  for (const auto& e : log.events) {
    const auto& p = e.event.position;
    out += std::to_string(e.tick) + " " + std::string(to_string(e.event.kind)) + " " +
           join({e.event.time, p.x(), p.y(), p.z()}) + "\n";
  }
  if (log.complete) out += "# end " + std::to_string(log.records.size()) + "\n";
  return out;
}

RunLog import_log(std::string_view text) {
  const Lines lines = split_lines(text);
  if (lines.lines.empty()) throw Error(ErrorCode::Schema, "log is empty");
  if (lines.lines.front().starts_with("{")) return import_jsonl(lines);
  if (lines.lines.front().starts_with("#")) return import_table(lines);
  throw Error(ErrorCode::Schema, "log line 1: unrecognized log format");
}

}  // namespace teleop
