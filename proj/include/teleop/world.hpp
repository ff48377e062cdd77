#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace teleop {

/// Axis-aligned box.
struct Box {
  Eigen::Vector3d min;
  Eigen::Vector3d max;

  [[nodiscard]] bool contains_xy(const Eigen::Vector3d& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

/// Grid maze. Text row 0 is the northern (+y) edge; column 0 the western
/// (-x) edge. Cell (row, col) covers x in [col, col+1] * cell_size and
/// y in [rows-1-row, rows-row] * cell_size. Walls span z in [0, wall_height].
/// All of these are relative to `origin`.
class Maze {
public:
  double cell_size = 1.0;
  double wall_height = 2.5;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  Box start_gate;
  Box finish_gate;
  Eigen::Vector3d spawn_position = Eigen::Vector3d::Zero();
  double spawn_yaw = 0.0;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // south-west grid corner; ground is z = origin.z
  std::string source_text;  // the document the maze was loaded from

  [[nodiscard]] bool is_wall(int row, int col) const {
    return walls[static_cast<std::size_t>(row * cols + col)] != 0;
  }
  [[nodiscard]] std::size_t wall_count() const;
  [[nodiscard]] Box cell_box(int row, int col) const;
  /// All wall cells as boxes.
  [[nodiscard]] std::vector<Box> wall_boxes() const;

  /// Returns a copy shifted by `offset` (for translation checks).
  [[nodiscard]] Maze translated(const Eigen::Vector3d& offset) const;
};

/// Parses the ASCII map format (see docs/maze_format.md). Throws Schema with
/// line and column on ragged rows, unknown characters, missing markers, or
/// non-rectangular gates.
Maze load_maze(std::string_view text);
Maze load_maze_file(const std::string& path);

/// True iff the sphere touches a wall box (closed contact) or dips below the
/// ground plane (z - radius < 0).
bool check_collision(const Maze& maze, const Eigen::Vector3d& position, double radius);

/// Squared distance from `p` to the closest point of `box`.
double squared_distance(const Box& box, const Eigen::Vector3d& p);

enum class RunEventKind { RunStarted, Collision, Finished, Reset };

std::string_view to_string(RunEventKind kind);
std::optional<RunEventKind> run_event_kind_from(std::string_view s);

struct RunEvent {
  RunEventKind kind = RunEventKind::RunStarted;
  double time = 0.0;  // session seconds
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  friend bool operator==(const RunEvent& a, const RunEvent& b) {
    return a.kind == b.kind && a.time == b.time && a.position == b.position;
  }
};

/// Start/finish gate and contact bookkeeping for one traversal.
class RunTracker {
public:
  explicit RunTracker(double radius = 0.25);

  /// Feeds one position sample at time t (non-decreasing). Returns the events
  /// triggered by this sample, in emission order: collision before
  /// run_started before finished.
  std::vector<RunEvent> advance(const Maze& maze, const Eigen::Vector3d& position, double t);

  /// Clears the run and returns the reset event.
  RunEvent reset(const Eigen::Vector3d& position, double t);

  [[nodiscard]] bool started() const { return started_at_.has_value(); }
  [[nodiscard]] bool finished() const { return finished_at_.has_value(); }
  [[nodiscard]] bool in_contact() const { return in_contact_; }
  [[nodiscard]] std::optional<double> traversal_time() const;
  [[nodiscard]] int collision_count() const { return collisions_; }
  [[nodiscard]] double radius() const { return radius_; }

private:
  double radius_;
  std::optional<double> started_at_;
  std::optional<double> finished_at_;
  bool in_contact_ = false;
  int collisions_ = 0;
};

}  // namespace teleop
