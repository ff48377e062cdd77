#include "teleop/metrics.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "teleop/digest.hpp"
#include "teleop/error.hpp"

namespace teleop {
namespace {

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == '\t') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(' ');
    const auto e = c.find_last_not_of(' ');
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

/// Non-empty, non-comment lines with their 1-based line numbers.
std::vector<std::pair<int, std::string_view>> table_lines(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> out;
  int n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (line.front() == '#') continue;
    out.emplace_back(n, line);
  }
  return out;
}

[[noreturn]] void row_error(int line, const std::string& msg) {
  throw Error(ErrorCode::Schema, "table line " + std::to_string(line) + ": " + msg);
}

double cell_number(const std::string& s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    row_error(line, "expected a number, got '" + s + "'");
  }
  return v;
}

bool cell_yes_no(const std::string& s, int line) {
  if (s == "YES" || s == "yes" || s == "Y" || s == "true") return true;
  if (s == "NO" || s == "no" || s == "N" || s == "false") return false;
  row_error(line, "expected YES or NO, got '" + s + "'");
}

}  // namespace

void TlxRecord::validate() const {
  if (modality == Modality::Trace) {
    throw Error(ErrorCode::Validation, "TLX modality must be pose or joystick");
  }
  for (std::size_t i = 0; i < kSubscaleCount; ++i) {
    const double r = ratings[i];
    if (!(std::isfinite(r) && r >= 0.0 && r <= 20.0)) {
      throw Error(ErrorCode::Validation, std::string("TLX ") + std::string(kSubscaleNames[i]) +
                                             " rating must be in [0,20], got " + format_double(r));
    }
  }
}

double rtlx(const TlxRecord& record) {
  record.validate();
  double sum = 0.0;
  for (double r : record.ratings) sum += r;
  return sum / static_cast<double>(kSubscaleCount);
}

AgeSummary summarize_ages(std::span<const double> ages) {
  if (ages.size() < 2) {
    throw Error(ErrorCode::Validation, "sample standard deviation needs at least 2 participants");
  }
  const double n = static_cast<double>(ages.size());
  double sum = 0.0;
  for (double a : ages) sum += a;
  const double mean = sum / n;
  double ss = 0.0;
  for (double a : ages) ss += (a - mean) * (a - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

AgeSummary summarize_ages(std::span<const ParticipantRecord> participants) {
  std::vector<double> ages;
  ages.reserve(participants.size());
  for (const auto& p : participants) ages.push_back(p.age);
  return summarize_ages(ages);
}

std::map<std::string, double> time_differences(std::span<const RunSummary> runs) {
  struct Pair {
    int pose = 0, joystick = 0;
    double t_pose = 0.0, t_joystick = 0.0;
  };
  std::map<std::string, Pair> by_id;
  for (const auto& r : runs) {
    auto& p = by_id[r.participant_id];
    if (r.modality == Modality::Pose) {
      ++p.pose;
      p.t_pose = r.traversal_time;
    } else if (r.modality == Modality::Joystick) {
      ++p.joystick;
      p.t_joystick = r.traversal_time;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [id, p] : by_id) {
    if (p.pose != 1 || p.joystick != 1) {
      throw Error(ErrorCode::IncompleteData,
                  "participant '" + id + "' needs exactly one finished run per modality (pose: " +
                      std::to_string(p.pose) + ", joystick: " + std::to_string(p.joystick) + ")");
    }
    out.emplace(id, p.t_joystick - p.t_pose);
  }
  return out;
}

std::array<double, kSubscaleCount> subscale_means(std::span<const TlxRecord> records,
                                                  Modality modality) {
  std::array<double, kSubscaleCount> sum{};
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.modality != modality) continue;
    r.validate();
    for (std::size_t i = 0; i < kSubscaleCount; ++i) sum[i] += r.ratings[i];
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::Validation,
                "no TLX records for modality '" + std::string(to_string(modality)) + "'");
  }
  for (double& s : sum) s /= static_cast<double>(count);
  return sum;
}

std::vector<ParticipantRecord> parse_participants(std::string_view text) {
  const auto lines = table_lines(text);
  std::vector<ParticipantRecord> out;
  std::set<std::string> ids;
  bool header = true;
  for (const auto& [n, line] : lines) {
    const auto cells = split_row(line);
    if (header) {
      header = false;
      if (cells.size() != 8 || cells[0] != "id") {
        row_error(n, "expected header 'id,age,gender,uav_experience,athlete,pc_games,console,vr_ar'");
      }
      continue;
    }
    if (cells.size() != 8) row_error(n, "expected 8 columns, got " + std::to_string(cells.size()));
    ParticipantRecord p;
    p.id = cells[0];
    p.age = cell_number(cells[1], n);
    if (!(p.age > 0.0)) row_error(n, "age must be > 0");
    p.gender = cells[2];
    p.uav_experience = cells[3];
    p.athlete = cell_yes_no(cells[4], n);
    p.pc_games = cell_yes_no(cells[5], n);
    p.console = cell_yes_no(cells[6], n);
    p.vr_ar = cell_yes_no(cells[7], n);
    if (!ids.insert(p.id).second) row_error(n, "duplicate participant id '" + p.id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

std::string tlx_csv_header() {
  return "participant,modality,mental,physical,temporal,performance,effort,frustration";
}

std::string tlx_csv_row(const TlxRecord& r) {
  std::string row = r.participant_id + "," + std::string(to_string(r.modality));
  for (double v : r.ratings) row += "," + format_double(v);
  return row;
}

std::vector<TlxRecord> parse_tlx(std::string_view text) {
  const auto lines = table_lines(text);
  std::vector<TlxRecord> out;
  bool header = true;
  for (const auto& [n, line] : lines) {
    const auto cells = split_row(line);
    if (header) {
      header = false;
      if (cells.size() != 8 || cells[0] != "participant") row_error(n, "expected header '" + tlx_csv_header() + "'");
      continue;
    }
    if (cells.size() != 8) row_error(n, "expected 8 columns, got " + std::to_string(cells.size()));
    TlxRecord r;
    r.participant_id = cells[0];
    try {
      r.modality = modality_from(cells[1]);
    } catch (const Error&) {
      row_error(n, "unknown modality '" + cells[1] + "'");
    }
    for (std::size_t i = 0; i < kSubscaleCount; ++i) r.ratings[i] = cell_number(cells[i + 2], n);
    try {
      r.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::Validation, "table line " + std::to_string(n) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace teleop
