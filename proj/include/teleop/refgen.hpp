#pragma once

#include <array>
#include <span>

#include "teleop/pose_input.hpp"

namespace teleop {

/// Axis-aligned rectangle in normalized image coordinates, given by its
/// upper-left (x_min, y_min) and lower-right (x_max, y_max) corners.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  [[nodiscard]] bool contains(Point2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  [[nodiscard]] Point2 midpoint() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// A control zone: an outer rectangle with a strictly nested dead zone.
struct Zone {
  Rect outer;
  Rect dead;
  Point2 center;

  /// Validates nesting and sets center to the outer midpoint. Throws Config.
  static Zone make(const Rect& outer, const Rect& dead);

  friend bool operator==(const Zone&, const Zone&) = default;
};

/// One image axis of a zone: outer_lo < dead_lo < dead_hi < outer_hi.
struct AxisBand {
  double outer_lo;
  double dead_lo;
  double dead_hi;
  double outer_hi;
  double center;
};

struct AxisMapping {
  /// Remap the active band so |r| grows from 0 at the dead-zone edge to 1 at
  /// the outer edge instead of jumping at the dead-zone edge.
  bool continuous = false;
  /// Treat positions beyond the outer edge as if on the edge instead of 0.
  bool clamp_outside = false;
};

/// Reference for one axis: proportional to (center - p) over the active band,
/// 0 on the closed dead interval and outside the outer interval.
double map_axis(double p, const AxisBand& band, const AxisMapping& mode = {});

/// r1 height, r2 yaw, r3 pitch, r4 roll; each in [-1,1].
struct ReferenceVector {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double r4 = 0.0;

  [[nodiscard]] std::array<double, 4> as_array() const { return {r1, r2, r3, r4}; }
  static ReferenceVector from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  friend bool operator==(const ReferenceVector&, const ReferenceVector&) = default;
};

struct ScalingFactors {
  double s_z = 0.01;      // m per reference tick
  double s_phi = 0.15;    // rad
  double s_theta = 0.15;  // rad
  double s_psi = 0.06;    // rad per reference tick

  void validate() const;
  friend bool operator==(const ScalingFactors&, const ScalingFactors&) = default;
};

struct Setpoints {
  double phi = 0.0;    // roll, absolute
  double theta = 0.0;  // pitch, absolute
  double psi = 0.0;    // yaw, integrated
  double z = 0.0;      // height, integrated

  friend bool operator==(const Setpoints&, const Setpoints&) = default;
};

/// Zone 1 (left hand) drives height (y) and yaw (x); zone 2 (right hand)
/// drives pitch (y) and roll (x). Stateless: no arming latch.
ReferenceVector make_reference(const HandPair& hands, const Zone& zone1, const Zone& zone2,
                               const AxisMapping& mode = {});

/// make_reference plus the arming latch: output stays zero until both hands
/// have been seen inside their dead zones once. The latch survives hand loss
/// and clears only on reset().
class ReferenceGenerator {
public:
  ReferenceGenerator(const Zone& zone1, const Zone& zone2, const AxisMapping& mode = {});

  ReferenceVector update(const HandPair& hands);
  void reset() { armed_ = false; }
  [[nodiscard]] bool armed() const { return armed_; }

  [[nodiscard]] const Zone& zone1() const { return zone1_; }
  [[nodiscard]] const Zone& zone2() const { return zone2_; }

private:
  Zone zone1_;
  Zone zone2_;
  AxisMapping mode_;
  bool armed_ = false;
};

/// One reference-loop tick: roll and pitch absolute, yaw and height integrated.
Setpoints integrate_setpoints(const Setpoints& prev, const ReferenceVector& r,
                              const ScalingFactors& s);

/// For each reference component, which input axis feeds it and with what sign.
/// Default is the Mode-2 layout: (left vertical, left horizontal, right
/// vertical, right horizontal) -> (r1, r2, r3, r4).
struct JoyAxisMap {
  std::array<int, 4> source{0, 1, 2, 3};
  std::array<double, 4> sign{1.0, 1.0, 1.0, 1.0};

  void validate() const;
  friend bool operator==(const JoyAxisMap&, const JoyAxisMap&) = default;
};

/// Clamps each axis to [-1,1] and routes it through the axis map.
/// Throws InvalidInput on a count other than 4 or a non-finite value.
ReferenceVector joy_to_reference(std::span<const double> axes, const JoyAxisMap& map = {});

}  // namespace teleop
