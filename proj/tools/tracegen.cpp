// Writes a joystick trace that flies a maze from start to finish.
//
// A scripted pilot closes the loop on the simulated vehicle: it follows the
// corridor centerline found by breadth-first search, commanding stick
// deflections the way a human would (pitch/roll for velocity, throttle for
// height). The resulting trace replays deterministically through
// `teleop simulate`.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <queue>

#include "CLI11.hpp"
#include "teleop/config.hpp"
#include "teleop/error.hpp"
#include "teleop/session.hpp"
#include "teleop/world.hpp"

using namespace teleop;

namespace {

struct Cell {
  int row;
  int col;
};

Eigen::Vector2d center_of(const Maze& maze, Cell c) {
  const Box b = maze.cell_box(c.row, c.col);
  return 0.5 * (b.min + b.max).head<2>();
}

Cell cell_at(const Maze& maze, const Eigen::Vector3d& p) {
  const Eigen::Vector3d local = p - maze.origin;
  return {maze.rows - 1 - static_cast<int>(std::floor(local.y() / maze.cell_size)),
          static_cast<int>(std::floor(local.x() / maze.cell_size))};
}

/// Corner cells of the shortest free path from the spawn cell to the finish gate.
std::vector<Eigen::Vector2d> plan(const Maze& maze) {
  const Cell start = cell_at(maze, maze.spawn_position);
  const Eigen::Vector3d goal_mid = 0.5 * (maze.finish_gate.min + maze.finish_gate.max);
  const Cell goal = cell_at(maze, goal_mid);
  std::vector<int> prev(static_cast<std::size_t>(maze.rows * maze.cols), -1);
  std::queue<Cell> open;
  open.push(start);
  prev[static_cast<std::size_t>(start.row * maze.cols + start.col)] = start.row * maze.cols + start.col;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!open.empty()) {
    const Cell c = open.front();
    open.pop();
    if (c.row == goal.row && c.col == goal.col) break;
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= maze.rows || n.col >= maze.cols || maze.is_wall(n.row, n.col)) continue;
      auto& slot = prev[static_cast<std::size_t>(n.row * maze.cols + n.col)];
      if (slot >= 0) continue;
      slot = c.row * maze.cols + c.col;
      open.push(n);
    }
  }
  if (prev[static_cast<std::size_t>(goal.row * maze.cols + goal.col)] < 0) {
    throw Error(ErrorCode::Schema, "finish gate is unreachable from the start");
  }
  std::vector<Cell> cells;
  for (int id = goal.row * maze.cols + goal.col;; id = prev[static_cast<std::size_t>(id)]) {
    cells.push_back({id / maze.cols, id % maze.cols});
    if (prev[static_cast<std::size_t>(id)] == id) break;
  }
  std::reverse(cells.begin(), cells.end());
  std::vector<Eigen::Vector2d> corners;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const bool last = i + 1 == cells.size();
    if (last) {
      corners.push_back(center_of(maze, cells[i]));
      break;
    }
    const int d1r = cells[i].row - cells[i - 1].row, d1c = cells[i].col - cells[i - 1].col;
    const int d2r = cells[i + 1].row - cells[i].row, d2c = cells[i + 1].col - cells[i].col;
    if (d1r != d2r || d1c != d2c) corners.push_back(center_of(maze, cells[i]));
  }
  return corners;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a joystick trace that flies a maze"};
  std::string config_path, maze_path, out_path;
  double duration = 60.0, cruise = 1.6, height = 1.2;
  app.add_option("-c,--config", config_path, "Configuration file");
  app.add_option("-m,--maze", maze_path, "Maze file (overrides world.maze)");
  app.add_option("-o,--out", out_path, "Trace output path")->required();
  app.add_option("-d,--duration", duration, "Trace length in seconds")->capture_default_str();
  app.add_option("--cruise", cruise, "Cruise speed, m/s")->capture_default_str();
  app.add_option("--height", height, "Flight height above ground, m")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const Config config = config_path.empty() ? Config{} : Config::load(config_path);
    const Maze maze = load_maze_file(maze_path.empty() ? config.resolved_maze_path() : maze_path);
    const auto waypoints = plan(maze);

    Session session(config, maze);
    const double period = config.reference_period();
    const double g = config.vehicle.gravity;
    const auto ticks = static_cast<std::uint64_t>(std::llround(duration / period));
    std::size_t target = 0;
    std::ofstream out(out_path);
    out << "# joystick trace: scripted pilot, " << waypoints.size() << " waypoints, " << duration << " s\n";
    for (std::uint64_t k = 0; k < ticks; ++k) {
      const VehicleState& s = session.state();
      std::array<double, 4> r{0.0, 0.0, 0.0, 0.0};
      if (!session.tracker().finished()) {
        const Eigen::Vector2d p = s.position.head<2>();
        while (target + 1 < waypoints.size() && (waypoints[target] - p).norm() < 0.6) ++target;
        const Eigen::Vector2d to = waypoints[target] - p;
        const double dist = to.norm();
        const Eigen::Vector2d v_des = dist > 1e-9 ? Eigen::Vector2d(to / dist * std::min(cruise, 0.8 * dist))
                                                  : Eigen::Vector2d::Zero();
        Eigen::Vector2d a = 1.5 * (v_des - s.velocity.head<2>());
        if (a.norm() > 2.0) a *= 2.0 / a.norm();
        const double yaw = attitude_of(s.orientation).yaw;
        const double forward = a.x() * std::cos(yaw) + a.y() * std::sin(yaw);
        const double left = -a.x() * std::sin(yaw) + a.y() * std::cos(yaw);
        r[2] = std::clamp(forward / g / config.scaling.s_theta, -1.0, 1.0);
        r[3] = std::clamp(-left / g / config.scaling.s_phi, -1.0, 1.0);
      }
      const double ground = maze.origin.z();
      r[0] = std::clamp((ground + height - session.setpoints().z) / config.scaling.s_z, -1.0, 1.0);

      // invert the joystick map so the session reconstructs r exactly
      std::array<double, 4> axes{0.0, 0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < 4; ++i) {
        axes[static_cast<std::size_t>(config.joy_map.source[i])] = r[i] * config.joy_map.sign[i];
      }
      protocol::InboundMessage msg;
      msg.seq = k + 1;
      msg.client_time = static_cast<double>(k) * period;
      msg.payload = protocol::JoyAxes{axes};
      out << protocol::to_json(msg) << "\n";

      Mailbox box;
      box.post(msg);
      session.tick(box.drain());
      if (session.halted()) throw Error(ErrorCode::Fault, session.fault());
    }
    const auto& tr = session.tracker();
    std::cerr << "finished=" << tr.finished() << " traversal="
              << (tr.traversal_time() ? *tr.traversal_time() : -1.0) << " s collisions=" << tr.collision_count()
              << "\n";
    return tr.finished() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
