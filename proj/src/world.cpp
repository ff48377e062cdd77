#include "teleop/world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop {
namespace {

[[noreturn]] void schema_error(int line, int col, const std::string& msg) {
  std::string where = "maze line " + std::to_string(line);
  if (col > 0) where += ", column " + std::to_string(col);
  throw Error(ErrorCode::Schema, where + ": " + msg);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_positive(std::string_view value, int line, bool allow_zero = false) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v) ||
      (allow_zero ? v < 0.0 : v <= 0.0)) {
    schema_error(line, 0, "expected a positive number, got '" + std::string(value) + "'");
  }
  return v;
}

double parse_real(std::string_view value, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    schema_error(line, 0, "expected a number, got '" + std::string(value) + "'");
  }
  return v;
}

struct CellSpan {
  int row_min = 0, row_max = -1, col_min = 0, col_max = -1;
  int count = 0;
  int first_line = 0;

  void add(int r, int c) {
    if (count == 0) {
      row_min = row_max = r;
      col_min = col_max = c;
    } else {
      row_min = std::min(row_min, r);
      row_max = std::max(row_max, r);
      col_min = std::min(col_min, c);
      col_max = std::max(col_max, c);
    }
    ++count;
  }
  [[nodiscard]] bool rectangular() const {
    return count == (row_max - row_min + 1) * (col_max - col_min + 1);
  }
};

}  // namespace

std::size_t Maze::wall_count() const {
  return static_cast<std::size_t>(std::count(walls.begin(), walls.end(), std::uint8_t{1}));
}

Box Maze::cell_box(int row, int col) const {
  const double x0 = col * cell_size;
  const double y0 = (rows - 1 - row) * cell_size;
  return {origin + Eigen::Vector3d(x0, y0, 0.0),
          origin + Eigen::Vector3d(x0 + cell_size, y0 + cell_size, wall_height)};
}

std::vector<Box> Maze::wall_boxes() const {
  std::vector<Box> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (is_wall(r, c)) out.push_back(cell_box(r, c));
    }
  }
  return out;
}

Maze Maze::translated(const Eigen::Vector3d& offset) const {
  Maze m = *this;
  m.origin += offset;
  m.start_gate.min += offset;
  m.start_gate.max += offset;
  m.finish_gate.min += offset;
  m.finish_gate.max += offset;
  m.spawn_position += offset;
  return m;
}

Maze load_maze(std::string_view text) {
  Maze maze;
  maze.source_text = std::string(text);
  double spawn_height = 1.0;

  std::vector<std::string> grid;
  int first_grid_line = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == ';') {
      if (end == text.size()) break;
      continue;
    }

    if (const auto eq = line.find('='); eq != std::string_view::npos) {
      if (!grid.empty()) schema_error(line_no, 1, "header line after the grid");
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      if (key == "cell_size") {
        maze.cell_size = parse_positive(value, line_no);
      } else if (key == "wall_height") {
        maze.wall_height = parse_positive(value, line_no);
      } else if (key == "spawn_height") {
        spawn_height = parse_positive(value, line_no);
      } else if (key == "spawn_yaw") {
        maze.spawn_yaw = parse_real(value, line_no);
      } else {
        schema_error(line_no, 1, "unknown header key '" + std::string(key) + "'");
      }
    } else {
      if (grid.empty()) first_grid_line = line_no;
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (ch != '#' && ch != '.' && ch != 'S' && ch != 'F') {
          schema_error(line_no, static_cast<int>(i) + 1,
                       std::string("unexpected character '") + ch + "'");
        }
      }
      if (!grid.empty() && line.size() != grid.front().size()) {
        schema_error(line_no, static_cast<int>(std::min(line.size(), grid.front().size())) + 1,
                     "ragged row: expected " + std::to_string(grid.front().size()) +
                         " columns, got " + std::to_string(line.size()));
      }
      if (grid.size() != static_cast<std::size_t>(line_no - first_grid_line)) {
        schema_error(line_no, 1, "grid rows must be contiguous");
      }
      grid.emplace_back(line);
    }
    if (end == text.size()) break;
  }

  if (grid.empty()) schema_error(line_no, 0, "map has no grid");
  maze.rows = static_cast<int>(grid.size());
  maze.cols = static_cast<int>(grid.front().size());
  maze.walls.assign(static_cast<std::size_t>(maze.rows * maze.cols), 0);

  CellSpan start, finish;
  int free_cells = 0;
  for (int r = 0; r < maze.rows; ++r) {
    for (int c = 0; c < maze.cols; ++c) {
      switch (grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) {
        case '#': maze.walls[static_cast<std::size_t>(r * maze.cols + c)] = 1; break;
        case 'S': start.add(r, c); break;
        case 'F': finish.add(r, c); break;
        default: ++free_cells; break;
      }
    }
  }

  if (start.count == 0) schema_error(first_grid_line, 0, "missing start marker 'S'");
  if (!start.rectangular()) {
    schema_error(first_grid_line + start.row_min, start.col_min + 1, "start cells 'S' must form a rectangle");
  }
  // A map made only of start cells is a degenerate maze whose finish is its start.
  const bool degenerate = finish.count == 0 && free_cells == 0 && maze.wall_count() == 0;
  if (finish.count == 0 && !degenerate) schema_error(first_grid_line, 0, "missing finish marker 'F'");
  if (finish.count > 0 && !finish.rectangular()) {
    schema_error(first_grid_line + finish.row_min, finish.col_min + 1,
                 "finish cells 'F' must form a rectangle");
  }

  const auto gate = [&](const CellSpan& s) {
    const Box lo = maze.cell_box(s.row_max, s.col_min);
    const Box hi = maze.cell_box(s.row_min, s.col_max);
    return Box{lo.min, hi.max};
  };
  maze.start_gate = gate(start);
  maze.finish_gate = degenerate ? maze.start_gate : gate(finish);
  const Eigen::Vector3d mid = 0.5 * (maze.start_gate.min + maze.start_gate.max);
  maze.spawn_position = Eigen::Vector3d(mid.x(), mid.y(), spawn_height);
  return maze;
}

Maze load_maze_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read maze file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_maze(ss.str());
}

double squared_distance(const Box& box, const Eigen::Vector3d& p) {
  const Eigen::Vector3d closest = p.cwiseMax(box.min).cwiseMin(box.max);
  return (p - closest).squaredNorm();
}

bool check_collision(const Maze& maze, const Eigen::Vector3d& position, double radius) {
  if (position.z() - radius < maze.origin.z()) return true;

  const Eigen::Vector3d local = position - maze.origin;
  const auto col_of = [&](double x) { return static_cast<int>(std::floor(x / maze.cell_size)); };
  const auto row_of = [&](double y) {
    return maze.rows - 1 - static_cast<int>(std::floor(y / maze.cell_size));
  };
  const int c_lo = std::max(0, col_of(local.x() - radius));
  const int c_hi = std::min(maze.cols - 1, col_of(local.x() + radius));
  const int r_lo = std::max(0, row_of(local.y() + radius));
  const int r_hi = std::min(maze.rows - 1, row_of(local.y() - radius));

  const double r2 = radius * radius;
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      if (maze.is_wall(r, c) && squared_distance(maze.cell_box(r, c), position) <= r2) return true;
    }
  }
  return false;
}

std::string_view to_string(RunEventKind kind) {
  switch (kind) {
    case RunEventKind::RunStarted: return "run_started";
    case RunEventKind::Collision: return "collision";
    case RunEventKind::Finished: return "finished";
    case RunEventKind::Reset: return "reset";
  }
  return "unknown";
}

std::optional<RunEventKind> run_event_kind_from(std::string_view s) {
  for (auto k : {RunEventKind::RunStarted, RunEventKind::Collision, RunEventKind::Finished,
                 RunEventKind::Reset}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

RunTracker::RunTracker(double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::Config, "collision radius must be > 0");
}

std::vector<RunEvent> RunTracker::advance(const Maze& maze, const Eigen::Vector3d& position,
                                          double t) {
  std::vector<RunEvent> events;

  const bool contact = check_collision(maze, position, radius_);
  if (contact && !in_contact_ && !finished()) {
    events.push_back({RunEventKind::Collision, t, position});
    ++collisions_;
  }
  in_contact_ = contact;

  if (finished()) return events;

  if (!started()) {
    const bool same_gate = maze.start_gate.min == maze.finish_gate.min &&
                           maze.start_gate.max == maze.finish_gate.max;
    if (same_gate || !maze.start_gate.contains_xy(position)) {
      started_at_ = t;
      events.push_back({RunEventKind::RunStarted, t, position});
    }
    // finished must come strictly after run_started
    return events;
  }

  if (t > *started_at_ && maze.finish_gate.contains_xy(position)) {
    finished_at_ = t;
    events.push_back({RunEventKind::Finished, t, position});
  }
  return events;
}

RunEvent RunTracker::reset(const Eigen::Vector3d& position, double t) {
  started_at_.reset();
  finished_at_.reset();
  in_contact_ = false;
  collisions_ = 0;
  return {RunEventKind::Reset, t, position};
}

std::optional<double> RunTracker::traversal_time() const {
  if (!started_at_ || !finished_at_) return std::nullopt;
  return *finished_at_ - *started_at_;
}

}  // namespace teleop
