#include "teleop/refgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teleop/error.hpp"

namespace teleop {
namespace {

bool strictly_nested(double olo, double dlo, double dhi, double ohi) {
  return olo < dlo && dlo < dhi && dhi < ohi;
}

bool unit_rect(const Rect& r) {
  const auto in = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  return in(r.x_min) && in(r.x_max) && in(r.y_min) && in(r.y_max) && r.x_min < r.x_max &&
         r.y_min < r.y_max;
}

AxisBand x_band(const Zone& z) {
  return {z.outer.x_min, z.dead.x_min, z.dead.x_max, z.outer.x_max, z.center.x};
}

AxisBand y_band(const Zone& z) {
  return {z.outer.y_min, z.dead.y_min, z.dead.y_max, z.outer.y_max, z.center.y};
}

}  // namespace

Zone Zone::make(const Rect& outer, const Rect& dead) {
  if (!unit_rect(outer) || !unit_rect(dead)) {
    throw Error(ErrorCode::Config, "zone rectangles must be ordered and inside [0,1]");
  }
  if (!strictly_nested(outer.x_min, dead.x_min, dead.x_max, outer.x_max) ||
      !strictly_nested(outer.y_min, dead.y_min, dead.y_max, outer.y_max)) {
    throw Error(ErrorCode::Config, "dead zone must be strictly inside the outer zone");
  }
  return {outer, dead, outer.midpoint()};
}

double map_axis(double p, const AxisBand& b, const AxisMapping& mode) {
  if (p >= b.dead_lo && p <= b.dead_hi) return 0.0;
  if (p < b.outer_lo || p > b.outer_hi) {
    if (!mode.clamp_outside) return 0.0;
    p = std::clamp(p, b.outer_lo, b.outer_hi);
  }

  if (mode.continuous) {
    if (p < b.dead_lo) return (b.dead_lo - p) / (b.dead_lo - b.outer_lo);
    return -(p - b.dead_hi) / (b.outer_hi - b.dead_hi);
  }

  // (center - p) / half-width, arranged so the outer edges give exactly +-1
  // when center is the outer midpoint.
  const double width = b.outer_hi - b.outer_lo;
  double r = ((b.outer_hi - p) - (p - b.outer_lo)) / width;
  const double mid = 0.5 * (b.outer_lo + b.outer_hi);
  if (b.center != mid) r += 2.0 * (b.center - mid) / width;
  return std::clamp(r, -1.0, 1.0);
}

ReferenceVector make_reference(const HandPair& hands, const Zone& zone1, const Zone& zone2,
                               const AxisMapping& mode) {
  ReferenceVector r;
  r.r1 = map_axis(hands.left.y, y_band(zone1), mode);
  r.r2 = map_axis(hands.left.x, x_band(zone1), mode);
  r.r3 = map_axis(hands.right.y, y_band(zone2), mode);
  r.r4 = map_axis(hands.right.x, x_band(zone2), mode);
  return r;
}

ReferenceGenerator::ReferenceGenerator(const Zone& zone1, const Zone& zone2,
                                       const AxisMapping& mode)
    : zone1_(zone1), zone2_(zone2), mode_(mode) {}

ReferenceVector ReferenceGenerator::update(const HandPair& hands) {
  if (!armed_ && zone1_.dead.contains(hands.left) && zone2_.dead.contains(hands.right)) {
    armed_ = true;
  }
  if (!armed_) return {};
  return make_reference(hands, zone1_, zone2_, mode_);
}

void ScalingFactors::validate() const {
  for (double v : {s_z, s_phi, s_theta, s_psi}) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw Error(ErrorCode::Config, "scaling factors must be finite and > 0");
    }
  }
}

Setpoints integrate_setpoints(const Setpoints& prev, const ReferenceVector& r,
                              const ScalingFactors& s) {
  Setpoints next;
  next.phi = r.r4 * s.s_phi;
  next.theta = r.r3 * s.s_theta;
  next.psi = prev.psi + r.r2 * s.s_psi;
  next.z = prev.z + r.r1 * s.s_z;
  return next;
}

void JoyAxisMap::validate() const {
  for (std::size_t i = 0; i < 4; ++i) {
    if (source[i] < 0 || source[i] > 3) {
      throw Error(ErrorCode::Config, "joystick axis source must be in 0..3");
    }
    if (sign[i] != 1.0 && sign[i] != -1.0) {
      throw Error(ErrorCode::Config, "joystick axis sign must be +1 or -1");
    }
  }
}

ReferenceVector joy_to_reference(std::span<const double> axes, const JoyAxisMap& map) {
  if (axes.size() != 4) {
    throw Error(ErrorCode::InvalidInput,
                "joystick input needs 4 axes, got " + std::to_string(axes.size()));
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double v = axes[static_cast<std::size_t>(map.source[i])];
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "joystick axis is not finite");
    out[i] = map.sign[i] * std::clamp(v, -1.0, 1.0);
  }
  return ReferenceVector::from_array(out);
}

}  // namespace teleop
