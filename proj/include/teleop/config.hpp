#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "teleop/modality.hpp"
#include "teleop/refgen.hpp"
#include "teleop/vehicle.hpp"

namespace teleop {

/// Everything a session needs, loaded from one key/value document
/// (see docs/config.md). Every key has a default, so an empty document is a
/// valid configuration.
struct Config {
  // pose_input / refgen
  std::size_t filter_window = 5;
  Zone zone1 = Zone::make({0.05, 0.20, 0.45, 0.80}, {0.20, 0.45, 0.30, 0.55});
  Zone zone2 = Zone::make({0.55, 0.20, 0.95, 0.80}, {0.70, 0.45, 0.80, 0.55});
  AxisMapping mapping;
  std::array<double, 4> pose_sign{1.0, 1.0, 1.0, 1.0};
  ScalingFactors scaling;
  JoyAxisMap joy_map;

  // vehicle
  VehicleParams vehicle;
  CascadeConfig cascade = CascadeConfig::defaults();

  // session
  double physics_dt = 0.001;
  double cascade_rate = 100.0;
  double reference_rate = 20.0;
  double telemetry_rate = 30.0;
  Modality modality = Modality::Joystick;
  double hold_timeout = 0.5;  // s a stale reference is held
  double decay_time = 0.5;    // s to ramp a held reference to zero afterwards
  bool ground_contact = true;
  std::uint64_t random_seed = 0;

  // world
  std::string maze_path = "../mazes/reference_maze.txt";  // relative to the config file
  double collision_radius = 0.25;
  bool reset_on_collision = false;

  // gateway
  int port = 8765;
  std::string token;
  double max_input_rate = 60.0;

  /// Parses a document; unknown keys and bad values throw Config naming the line.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);
  /// Overrides one key (same syntax as the document); call validate() afterwards.
  void set(std::string_view key, std::string_view value);

  /// Checks cross-field invariants (rate divisibility, zone nesting, gains).
  void validate() const;

  /// Sorted `key = value` lines with shortest round-trip numbers; every key present.
  [[nodiscard]] std::string canonical() const;
  /// Hex SHA-256 of canonical().
  [[nodiscard]] std::string digest() const;
  /// Hex SHA-256 of the zone geometry and mapping keys only.
  [[nodiscard]] std::string zone_digest() const;

  [[nodiscard]] int physics_steps_per_cascade() const;
  [[nodiscard]] int cascades_per_reference() const;
  [[nodiscard]] double reference_period() const;
  [[nodiscard]] double cascade_period() const;

  /// Directory of the file the config was loaded from ("" when parsed from text).
  std::string base_dir;
  [[nodiscard]] std::string resolved_maze_path() const;

private:
  [[nodiscard]] std::map<std::string, std::string> to_map() const;
};

}  // namespace teleop
