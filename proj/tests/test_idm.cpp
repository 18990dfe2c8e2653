#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "drivebench/error.hpp"
#include "drivebench/idm.hpp"

using namespace drivebench;

namespace {

Hazard leader(double gap, double closing) {
  Hazard h;
  h.kind = HazardKind::LeadingVehicle;
  h.gap = gap;
  h.closing_speed = closing;
  return h;
}

// Straight transcription of the IDM formula, without clamping.
double reference_idm(double v, double gap, double dv, const IdmParams& p) {
  const double s_star = p.min_gap + v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
  return p.max_accel * (1.0 - std::pow(v / p.desired_speed, p.exponent) - (s_star / gap) * (s_star / gap));
}

struct PlatoonOutcome {
  double min_gap = 1e9;
};

// Leader cruises, brakes to a stop at `leader_decel`, holds, then resumes.
// Followers use idm_acceleration on the bumper gap; Euler integration.
PlatoonOutcome run_platoon(const IdmParams& p, double leader_decel, double start_gap, double start_speed) {
  const int n = 6;  // leader + 5 followers
  const double length = 4.7, dt = 0.05;
  std::vector<double> x(n), v(n, start_speed);
  for (int i = 0; i < n; ++i) x[i] = -i * (start_gap + length);
  PlatoonOutcome out;
  for (int t = 0; t * dt < 60.0; ++t) {
    const double time = t * dt;
    std::vector<double> a(n);
    a[0] = (time >= 10.0 && time < 30.0) ? -leader_decel : (v[0] < p.desired_speed ? p.max_accel : 0.0);
    for (int i = 1; i < n; ++i) {
      const double gap = x[i - 1] - x[i] - length;
      out.min_gap = std::min(out.min_gap, gap);
      a[i] = idm_acceleration(v[i], leader(gap, v[i] - v[i - 1]), p).accel;
    }
    for (int i = 0; i < n; ++i) {
      v[i] = std::max(0.0, v[i] + a[i] * dt);
      if (i == 0) v[0] = std::min(v[0], p.desired_speed);
      x[i] += v[i] * dt;
    }
  }
  return out;
}

}  // namespace

TEST(Idm, FreeFlowEquilibrium) {
  const IdmParams p;
  EXPECT_EQ(idm_acceleration(p.desired_speed, Hazard{}, p).accel, 0.0);
}

TEST(Idm, StandstillEquilibrium) {
  const IdmParams p;
  EXPECT_NEAR(idm_acceleration(0.0, leader(p.min_gap, 0.0), p).accel, 0.0, 1e-15);
}

TEST(Idm, HandEvaluatedCase) {
  IdmParams p;
  p.max_accel = 2;
  p.comfort_decel = 4;
  p.min_gap = 4;
  p.time_headway = 1;
  p.desired_speed = 10;
  p.exponent = 4;
  // s* = 4 + 5 = 9; (5/10)^4 = 0.0625; (9/20)^2 = 0.2025.
  const double expected = 2.0 * (1.0 - 0.0625 - 0.2025);
  EXPECT_NEAR(expected, 1.47, 1e-12);
  EXPECT_NEAR(idm_acceleration(5.0, leader(20.0, 0.0), p).accel, 1.47, 1e-9);
}

TEST(Idm, MatchesReferenceFormulaInsideClamp) {
  const IdmParams p;
  for (double v = 0.0; v <= 12.0; v += 0.5)
    for (double gap = 1.0; gap <= 80.0; gap += 3.5)
      for (double dv = -4.0; dv <= 4.0; dv += 1.0) {
        const double ref = std::clamp(reference_idm(v, gap, dv, p), -p.emergency_decel, p.max_accel);
        EXPECT_NEAR(idm_acceleration(v, leader(gap, dv), p).accel, ref, 1e-12);
      }
}

TEST(Idm, ClosedGapIsEmergency) {
  const IdmParams p;
  const IdmResult r = idm_acceleration(3.0, leader(0.0, 1.0), p);
  EXPECT_TRUE(r.emergency);
  EXPECT_EQ(r.accel, -p.emergency_decel);
  EXPECT_TRUE(idm_acceleration(3.0, leader(-2.0, 1.0), p).emergency);
  EXPECT_FALSE(idm_acceleration(3.0, leader(10.0, 1.0), p).emergency);
}

TEST(Idm, OutputAlwaysClamped) {
  const IdmParams p;
  for (double v = 0.0; v <= 30.0; v += 0.7)
    for (double gap = 0.1; gap <= 100.0; gap *= 1.7)
      for (double dv = -10.0; dv <= 10.0; dv += 2.5) {
        const double a = idm_acceleration(v, leader(gap, dv), p).accel;
        EXPECT_GE(a, -p.emergency_decel);
        EXPECT_LE(a, p.max_accel);
      }
}

TEST(Idm, Monotonicity) {
  const IdmParams p;
  for (double dv = -3.0; dv <= 3.0; dv += 1.5) {
    for (double gap = 2.0; gap <= 60.0; gap += 2.0) {
      double prev = 1e9;
      for (double v = 0.0; v <= 15.0; v += 0.25) {
        const double a = idm_acceleration(v, leader(gap, dv), p).accel;
        EXPECT_LE(a, prev + 1e-12) << "v=" << v << " gap=" << gap;
        prev = a;
      }
    }
    for (double v = 0.0; v <= 15.0; v += 0.5) {
      double prev = -1e9;
      for (double gap = 0.5; gap <= 80.0; gap += 0.5) {
        const double a = idm_acceleration(v, leader(gap, dv), p).accel;
        EXPECT_GE(a, prev - 1e-12) << "v=" << v << " gap=" << gap;
        prev = a;
      }
    }
  }
}

TEST(Idm, PlatoonSafetyBehindBrakingLeader) {
  // Grid: leader deceleration x initial spacing x initial speed.
  const IdmParams p;
  for (double decel : {2.0, 4.0, 6.0, 8.0})
    for (double gap : {8.0, 15.0, 30.0})
      for (double speed : {4.0, 8.3}) {
        const PlatoonOutcome o = run_platoon(p, decel, gap, speed);
        EXPECT_GE(o.min_gap, 0.5 * p.min_gap) << "decel=" << decel << " gap=" << gap << " speed=" << speed;
      }
}

TEST(Idm, FreeRoadConvergence) {
  const IdmParams p;
  const double dt = 0.05;
  for (double v0 = 0.0; v0 <= 2.0 * p.desired_speed + 1e-9; v0 += 0.1 * p.desired_speed) {
    double v = v0;
    for (int t = 0; t * dt < 60.0; ++t) v = std::max(0.0, v + idm_acceleration(v, Hazard{}, p).accel * dt);
    EXPECT_NEAR(v / p.desired_speed, 1.0, 0.01) << "start " << v0;
  }
}

TEST(Idm, ParameterValidation) {
  IdmParams p;
  EXPECT_NO_THROW(p.validate());
  p.exponent = 0.5;
  EXPECT_THROW(p.validate(), InvalidConfig);
  p = IdmParams{};
  p.min_gap = 0.0;
  EXPECT_THROW(p.validate(), InvalidConfig);
  p = IdmParams{};
  p.time_headway = -1.0;
  EXPECT_THROW(p.validate(), InvalidConfig);
}

TEST(Idm, NamesRoundTrip) {
  for (HazardKind k : {HazardKind::None, HazardKind::LeadingVehicle, HazardKind::Walker, HazardKind::RedLight,
                       HazardKind::StopSign})
    EXPECT_EQ(hazard_kind_from_string(to_string(k)), k);
  for (Direction d : {Direction::Front, Direction::Left, Direction::Right, Direction::Oncoming})
    EXPECT_EQ(direction_from_string(to_string(d)), d);
  EXPECT_THROW(hazard_kind_from_string("dragon"), ParseError);
}
