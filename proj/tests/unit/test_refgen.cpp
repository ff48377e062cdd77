#include <gtest/gtest.h>

#include <random>

#include "teleop/config.hpp"
#include "teleop/error.hpp"
#include "teleop/refgen.hpp"

namespace teleop {
namespace {

const AxisBand kZone1Vertical{0.20, 0.45, 0.55, 0.80, 0.50};

Zone default_zone1() { return Config{}.zone1; }
Zone default_zone2() { return Config{}.zone2; }

struct RandomBand {
  AxisBand band;
  bool centered;
};

// Random strictly nested band; every other one has its dead zone centered.
RandomBand random_band(std::mt19937_64& rng, bool centered) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 0.05) continue;
    const double c = 0.5 * (lo + hi);
    double dlo, dhi;
    if (centered) {
      const double half = u(rng) * 0.45 * (hi - lo) + 1e-3;
      dlo = c - half;
      dhi = c + half;
    } else {
      dlo = lo + u(rng) * (hi - lo);
      dhi = lo + u(rng) * (hi - lo);
      if (dlo > dhi) std::swap(dlo, dhi);
    }
    if (!(lo < dlo && dlo < dhi && dhi < hi)) continue;
    return {{lo, dlo, dhi, hi, c}, centered};
  }
}

TEST(MapAxis, CenterIsZero) { EXPECT_EQ(map_axis(0.5, kZone1Vertical), 0.0); }

TEST(MapAxis, DefaultBandValues) {
  EXPECT_EQ(map_axis(0.20, kZone1Vertical), 1.0);
  EXPECT_NEAR(map_axis(0.30, kZone1Vertical), (0.5 - 0.3) / 0.3, 1e-12);
  EXPECT_EQ(map_axis(0.90, kZone1Vertical), 0.0);
  EXPECT_EQ(map_axis(0.80, kZone1Vertical), -1.0);
}

TEST(MapAxis, JumpAtDeadZoneEdgeInVerbatimMode) {
  EXPECT_EQ(map_axis(0.45, kZone1Vertical), 0.0);
  EXPECT_NEAR(map_axis(0.4499, kZone1Vertical), (0.5 - 0.4499) / 0.3, 1e-12);
}

TEST(MapAxis, ContinuousModeStartsAtZeroOnTheDeadEdge) {
  AxisMapping m;
  m.continuous = true;
  EXPECT_NEAR(map_axis(0.4499999, kZone1Vertical, m), 0.0, 1e-5);
  EXPECT_EQ(map_axis(0.20, kZone1Vertical, m), 1.0);
  EXPECT_NEAR(map_axis(0.325, kZone1Vertical, m), 0.5, 1e-12);
  EXPECT_EQ(map_axis(0.80, kZone1Vertical, m), -1.0);
}

TEST(MapAxis, ClampOutsideMode) {
  AxisMapping m;
  m.clamp_outside = true;
  EXPECT_EQ(map_axis(0.05, kZone1Vertical, m), 1.0);
  EXPECT_EQ(map_axis(0.95, kZone1Vertical, m), -1.0);
}

TEST(MapAxis, PropertiesOverRandomGeometries) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  for (int g = 0; g < 100; ++g) {
    const RandomBand rb = random_band(rng, g % 2 == 0);
    const AxisBand& b = rb.band;
    EXPECT_EQ(std::abs(map_axis(b.outer_lo, b)), 1.0);
    EXPECT_EQ(std::abs(map_axis(b.outer_hi, b)), 1.0);
    EXPECT_EQ(map_axis(b.dead_lo, b), 0.0);
    EXPECT_EQ(map_axis(b.dead_hi, b), 0.0);
    for (int k = 0; k < 10000; ++k) {
      const double p = u(rng);
      const double r = map_axis(p, b);
      ASSERT_GE(r, -1.0);
      ASSERT_LE(r, 1.0);
      if (p >= b.dead_lo && p <= b.dead_hi) {
        ASSERT_EQ(r, 0.0);
      }
      if (p < b.outer_lo || p > b.outer_hi) {
        ASSERT_EQ(r, 0.0);
      }
      const double mirror = 2.0 * b.center - p;
      const auto active = [&](double q) {
        return q >= b.outer_lo && q <= b.outer_hi && (q < b.dead_lo || q > b.dead_hi);
      };
      if (rb.centered && active(p) && active(mirror)) {
        ASSERT_NEAR(map_axis(mirror, b), -r, 1e-12) << "p=" << p;
      }
    }
  }
}

TEST(MakeReference, HandsAtCentersGiveZero) {
  const Zone z1 = default_zone1(), z2 = default_zone2();
  EXPECT_EQ(make_reference({z1.center, z2.center}, z1, z2), ReferenceVector{});
}

TEST(MakeReference, LeftHandAtTopEdge) {
  const Zone z1 = default_zone1(), z2 = default_zone2();
  const ReferenceVector r = make_reference({{0.25, 0.20}, z2.center}, z1, z2);
  EXPECT_EQ(r, (ReferenceVector{1.0, 0.0, 0.0, 0.0}));
}

TEST(MakeReference, AxisAssignment) {
  const Zone z1 = default_zone1(), z2 = default_zone2();
  // left hand left of center -> r2 > 0; right hand up -> r3 > 0; right hand left -> r4 > 0
  const ReferenceVector r = make_reference({{0.10, 0.50}, {0.60, 0.25}}, z1, z2);
  EXPECT_EQ(r.r1, 0.0);
  EXPECT_GT(r.r2, 0.0);
  EXPECT_GT(r.r3, 0.0);
  EXPECT_GT(r.r4, 0.0);
}

TEST(ReferenceGenerator, StaysDisarmedUntilBothHandsVisitDeadZones) {
  const Zone z1 = default_zone1(), z2 = default_zone2();
  ReferenceGenerator gen(z1, z2);
  EXPECT_EQ(gen.update({{0.25, 0.20}, z2.center}), ReferenceVector{});
  EXPECT_EQ(gen.update({z1.center, {0.90, 0.9}}), ReferenceVector{});
  EXPECT_FALSE(gen.armed());
  gen.update({z1.center, z2.center});
  EXPECT_TRUE(gen.armed());
  EXPECT_EQ(gen.update({{0.25, 0.20}, z2.center}).r1, 1.0);
  gen.reset();
  EXPECT_EQ(gen.update({{0.25, 0.20}, z2.center}), ReferenceVector{});
}

TEST(Zone, RejectsNonNestedGeometry) {
  EXPECT_THROW(Zone::make({0.1, 0.1, 0.5, 0.5}, {0.1, 0.2, 0.3, 0.3}), Error);
  EXPECT_THROW(Zone::make({0.1, 0.1, 0.5, 0.5}, {0.2, 0.2, 0.6, 0.3}), Error);
  EXPECT_THROW(Zone::make({0.5, 0.1, 0.1, 0.5}, {0.2, 0.2, 0.3, 0.3}), Error);
}

TEST(IntegrateSetpoints, ZeroReferenceHoldsYawAndHeight) {
  const Setpoints prev{0.1, -0.1, 0.7, 2.5};
  const Setpoints next = integrate_setpoints(prev, {}, ScalingFactors{});
  EXPECT_EQ(next, (Setpoints{0.0, 0.0, 0.7, 2.5}));
}

TEST(IntegrateSetpoints, YawRampAndRollScale) {
  Setpoints sp;
  for (int k = 0; k < 10; ++k) sp = integrate_setpoints(sp, {0.0, 1.0, 0.0, 0.5}, ScalingFactors{});
  EXPECT_NEAR(sp.psi, 0.6, 1e-12);
  EXPECT_NEAR(sp.phi, 0.075, 1e-15);
}

TEST(IntegrateSetpoints, AttitudeBoundedByScale) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const ScalingFactors s;
  for (int k = 0; k < 1000; ++k) {
    const Setpoints sp = integrate_setpoints({}, {u(rng), u(rng), u(rng), u(rng)}, s);
    ASSERT_LE(std::abs(sp.phi), s.s_phi);
    ASSERT_LE(std::abs(sp.theta), s.s_theta);
  }
}

TEST(JoyToReference, Examples) {
  const std::array<double, 4> zero{0, 0, 0, 0};
  EXPECT_EQ(joy_to_reference(zero), ReferenceVector{});
  const std::array<double, 4> wild{1.5, -0.5, 0.2, -2.0};
  EXPECT_EQ(joy_to_reference(wild), (ReferenceVector{1.0, -0.5, 0.2, -1.0}));
  const std::array<double, 4> up{0.3, 0, 0, 0};
  EXPECT_EQ(joy_to_reference(up), (ReferenceVector{0.3, 0.0, 0.0, 0.0}));
}

TEST(JoyToReference, WrongAxisCount) {
  const std::array<double, 3> three{0, 0, 0};
  try {
    joy_to_reference(three);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(JoyToReference, AxisMapRoutesAndFlips) {
  JoyAxisMap m;
  m.source = {3, 2, 1, 0};
  m.sign = {1, -1, 1, -1};
  const std::array<double, 4> axes{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(joy_to_reference(axes, m), (ReferenceVector{0.4, -0.3, 0.2, -0.1}));
}

TEST(ModalityEquivalence, SameReferenceSameSetpoints) {
  const Zone z1 = default_zone1(), z2 = default_zone2();
  const ReferenceVector from_pose = make_reference({{0.25, 0.20}, z2.center}, z1, z2);
  const std::array<double, 4> axes{1.0, 0.0, 0.0, 0.0};
  const ReferenceVector from_joy = joy_to_reference(axes);
  ASSERT_EQ(from_pose, from_joy);
  EXPECT_EQ(integrate_setpoints({}, from_pose, {}), integrate_setpoints({}, from_joy, {}));
}

}  // namespace
}  // namespace teleop
