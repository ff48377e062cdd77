#pragma once

#include <limits>

#include <Eigen/Geometry>

#include "teleop/refgen.hpp"

namespace teleop {

/// Rigid-body state. World frame is z-up; body frame is x forward, y left,
/// z up. Positive roll banks right, positive pitch lowers the nose, positive
/// yaw turns counterclockwise seen from above.
struct VehicleState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();  // world <- body
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();           // body frame

  static VehicleState at_rest(const Eigen::Vector3d& position, double yaw);
};

/// Z-Y-X Euler angles of a world<-body rotation.
struct Attitude {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

Attitude attitude_of(const Eigen::Quaterniond& q);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct BodyCommand {
  double thrust = 0.0;                              // N along body z
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N m, body frame
};

struct VehicleParams {
  double mass = 0.5;                                      // kg
  Eigen::Vector3d inertia{2.1e-3, 2.45e-3, 4.4e-3};       // kg m^2, diagonal
  double thrust_max = 14.0;                               // N
  double drag = 0.1;                                      // N s / m, linear
  double gravity = 9.81;                                  // m / s^2
  // Actuator effectiveness: rate-loop output units to N m / N.
  Eigen::Vector3d torque_gain{2.1e-3, 2.45e-3, 4.4e-3};
  double thrust_gain = 0.05;

  void validate() const;
  [[nodiscard]] double hover_thrust() const { return mass * gravity; }
};

struct PidGains {
  double p = 0.0;
  double i = 0.0;
  double d = 0.0;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct PidConfig {
  PidGains gains;
  double integral_limit = kUnbounded;  // bound on |i * integral(e)|, output units
  double output_limit = kUnbounded;
};

/// Parallel PID: p*e + i*integral(e dt) - d*d(measurement)/dt.
/// Rectangle-rule integral, clamped for anti-windup; the derivative acts on
/// the measurement and is zero on the first step after reset.
class Pid {
public:
  Pid() = default;
  explicit Pid(const PidConfig& config) : config_(config) {}

  /// Throws Fault on non-finite input or dt <= 0; state is left untouched then.
  double step(double error, double measurement, double dt);
  void reset();

  [[nodiscard]] double integral_term() const { return integral_; }
  [[nodiscard]] const PidConfig& config() const { return config_; }

private:
  PidConfig config_;
  double integral_ = 0.0;
  double last_measurement_ = 0.0;
  bool has_last_ = false;
};

struct CascadeConfig {
  PidConfig roll;
  PidConfig roll_rate;
  PidConfig pitch;
  PidConfig pitch_rate;
  PidConfig yaw;
  PidConfig yaw_rate;
  PidConfig z;
  PidConfig z_rate;

  /// Flight-tested gain set with the shipped anti-windup bounds.
  static CascadeConfig defaults();
  void validate() const;
};

/// Attitude and height cascade. Outer loops (roll, pitch, yaw, z) produce
/// rate setpoints; inner loops (body rates, vertical speed) produce torques
/// and a thrust offset about hover.
class CascadeController {
public:
  CascadeController(const CascadeConfig& config, const VehicleParams& params);

  BodyCommand update(const VehicleState& state, const Setpoints& sp, double dt);
  void reset();

private:
  CascadeConfig config_;
  VehicleParams params_;
  Pid roll_, roll_rate_, pitch_, pitch_rate_, yaw_, yaw_rate_, z_, z_rate_;
  double yaw_unwrapped_ = 0.0;
  double last_yaw_ = 0.0;
  bool has_yaw_ = false;
};

/// Semi-implicit Euler step of the Newton-Euler equations, dt in (0, 0.01].
/// Thrust is clamped to [0, thrust_max]. Throws Fault on a non-finite command.
VehicleState dynamics_step(const VehicleState& state, const BodyCommand& cmd,
                           const VehicleParams& params, double dt);

}  // namespace teleop
