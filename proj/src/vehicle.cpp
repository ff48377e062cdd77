#include "teleop/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "teleop/error.hpp"

namespace teleop {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::Fault, std::string("non-finite ") + what);
}

double clamp_abs(double v, double limit) { return std::clamp(v, -limit, limit); }

void validate_pid(const PidConfig& c, const char* name) {
  const auto& g = c.gains;
  if (!(g.p >= 0.0 && g.i >= 0.0 && g.d >= 0.0) || !std::isfinite(g.p) || !std::isfinite(g.i) ||
      !std::isfinite(g.d)) {
    throw Error(ErrorCode::Config, std::string("gains of loop '") + name + "' must be finite and >= 0");
  }
  if (!(c.integral_limit >= 0.0) || !(c.output_limit > 0.0)) {
    throw Error(ErrorCode::Config, std::string("limits of loop '") + name + "' must be positive");
  }
}

}  // namespace

VehicleState VehicleState::at_rest(const Eigen::Vector3d& position, double yaw) {
  VehicleState s;
  s.position = position;
  s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
  return s;
}

Attitude attitude_of(const Eigen::Quaterniond& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Attitude a;
  a.roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  a.pitch = std::asin(std::clamp(2.0 * (w * y - z * x), -1.0, 1.0));
  a.yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return a;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

void VehicleParams::validate() const {
  const bool ok = mass > 0.0 && inertia.minCoeff() > 0.0 && thrust_max > hover_thrust() &&
                  drag >= 0.0 && gravity > 0.0 && torque_gain.minCoeff() > 0.0 && thrust_gain > 0.0 &&
                  std::isfinite(mass + inertia.sum() + thrust_max + drag + gravity +
                                torque_gain.sum() + thrust_gain);
  if (!ok) throw Error(ErrorCode::Config, "invalid vehicle parameters");
}

double Pid::step(double error, double measurement, double dt) {
  require_finite(error, "PID error");
  require_finite(measurement, "PID measurement");
  if (!(dt > 0.0)) throw Error(ErrorCode::Fault, "PID step needs dt > 0");

  const auto& g = config_.gains;
  const double integral =
      clamp_abs(integral_ + g.i * error * dt, config_.integral_limit);
  const double derivative = has_last_ ? -(measurement - last_measurement_) / dt : 0.0;
  const double out = g.p * error + integral + g.d * derivative;
  require_finite(out, "PID output");

  integral_ = integral;
  last_measurement_ = measurement;
  has_last_ = true;
  return clamp_abs(out, config_.output_limit);
}

void Pid::reset() {
  integral_ = 0.0;
  last_measurement_ = 0.0;
  has_last_ = false;
}

CascadeConfig CascadeConfig::defaults() {
  CascadeConfig c;
  c.roll = {{10.0, 0.25, 0.25}, 0.1, kUnbounded};
  c.roll_rate = {{50.0, 50.0, 0.0}, 25.0, kUnbounded};
  c.pitch = {{10.0, 0.25, 0.25}, 0.1, kUnbounded};
  c.pitch_rate = {{50.0, 50.0, 0.0}, 25.0, kUnbounded};
  c.yaw = {{2.5, 1.0, 0.1}, 0.5, kUnbounded};
  c.yaw_rate = {{30.0, 0.0, 0.0}, kUnbounded, kUnbounded};
  c.z = {{0.5, 0.125, 0.0}, 0.025, kUnbounded};
  c.z_rate = {{75.0, 10.0, 0.41}, 50.0, kUnbounded};
  return c;
}

void CascadeConfig::validate() const {
  validate_pid(roll, "roll");
  validate_pid(roll_rate, "roll_rate");
  validate_pid(pitch, "pitch");
  validate_pid(pitch_rate, "pitch_rate");
  validate_pid(yaw, "yaw");
  validate_pid(yaw_rate, "yaw_rate");
  validate_pid(z, "z");
  validate_pid(z_rate, "z_rate");
}

CascadeController::CascadeController(const CascadeConfig& config, const VehicleParams& params)
    : config_(config),
      params_(params),
      roll_(config.roll),
      roll_rate_(config.roll_rate),
      pitch_(config.pitch),
      pitch_rate_(config.pitch_rate),
      yaw_(config.yaw),
      yaw_rate_(config.yaw_rate),
      z_(config.z),
      z_rate_(config.z_rate) {}

BodyCommand CascadeController::update(const VehicleState& state, const Setpoints& sp, double dt) {
  require_finite(sp.phi + sp.theta + sp.psi + sp.z, "setpoint");
  const Attitude att = attitude_of(state.orientation);
  const Eigen::Vector3d& rate = state.angular_rate;

  // Continuous yaw for the derivative path; the error itself is wrapped.
  const double yaw_unwrapped =
      has_yaw_ ? yaw_unwrapped_ + wrap_angle(att.yaw - last_yaw_) : att.yaw;

  const double roll_rate_sp = roll_.step(sp.phi - att.roll, att.roll, dt);
  const double pitch_rate_sp = pitch_.step(sp.theta - att.pitch, att.pitch, dt);
  const double yaw_rate_sp = yaw_.step(wrap_angle(sp.psi - att.yaw), yaw_unwrapped, dt);
  const double climb_sp = z_.step(sp.z - state.position.z(), state.position.z(), dt);

  const double u_roll = roll_rate_.step(roll_rate_sp - rate.x(), rate.x(), dt);
  const double u_pitch = pitch_rate_.step(pitch_rate_sp - rate.y(), rate.y(), dt);
  const double u_yaw = yaw_rate_.step(yaw_rate_sp - rate.z(), rate.z(), dt);
  const double u_z = z_rate_.step(climb_sp - state.velocity.z(), state.velocity.z(), dt);

  yaw_unwrapped_ = yaw_unwrapped;
  last_yaw_ = att.yaw;
  has_yaw_ = true;

  BodyCommand cmd;
  cmd.torque = params_.torque_gain.cwiseProduct(Eigen::Vector3d(u_roll, u_pitch, u_yaw));
  cmd.thrust = std::clamp(params_.hover_thrust() + params_.thrust_gain * u_z, 0.0,
                          params_.thrust_max);
  return cmd;
}

void CascadeController::reset() {
  for (Pid* p : {&roll_, &roll_rate_, &pitch_, &pitch_rate_, &yaw_, &yaw_rate_, &z_, &z_rate_}) {
    p->reset();
  }
  yaw_unwrapped_ = 0.0;
  last_yaw_ = 0.0;
  has_yaw_ = false;
}

VehicleState dynamics_step(const VehicleState& state, const BodyCommand& cmd,
                           const VehicleParams& params, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorCode::Fault, "physics dt must be in (0, 0.01]");
  require_finite(cmd.thrust, "thrust");
  if (!cmd.torque.allFinite()) throw Error(ErrorCode::Fault, "non-finite torque");

  const double thrust = std::clamp(cmd.thrust, 0.0, params.thrust_max);
  const Eigen::Matrix3d rot = state.orientation.toRotationMatrix();

  VehicleState next = state;

  const Eigen::Vector3d force = rot * Eigen::Vector3d(0.0, 0.0, thrust) -
                                Eigen::Vector3d(0.0, 0.0, params.mass * params.gravity) -
                                params.drag * state.velocity;
  next.velocity = state.velocity + (force / params.mass) * dt;
  next.position = state.position + next.velocity * dt;

  const Eigen::Vector3d& w = state.angular_rate;
  const Eigen::Vector3d gyro = w.cross(params.inertia.cwiseProduct(w));
  const Eigen::Vector3d alpha = (cmd.torque - gyro).cwiseQuotient(params.inertia);
  next.angular_rate = w + alpha * dt;

  // Attitude update with the new rate: q <- q * exp(w dt / 2).
  const Eigen::Vector3d rot_vec = next.angular_rate * dt;
  const double angle = rot_vec.norm();
  if (angle > 0.0) {
    const Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, rot_vec / angle));
    next.orientation = state.orientation * dq;
  }
  next.orientation.normalize();

  if (!next.position.allFinite() || !next.velocity.allFinite() ||
      !next.angular_rate.allFinite() || !next.orientation.coeffs().allFinite()) {
    throw Error(ErrorCode::Fault, "vehicle state diverged");
  }
  return next;
}

}  // namespace teleop
