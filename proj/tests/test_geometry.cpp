#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "drivebench/error.hpp"
#include "drivebench/geometry.hpp"

using namespace drivebench;

namespace {

// Brute-force nearest point: walk every segment at a fixed arc-length step.
struct DenseNearest {
  double s;
  Vec2 point;
  double dist;
};

DenseNearest dense_nearest(const std::vector<Vec2>& pts, const Vec2& p, long samples) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  DenseNearest best{0.0, pts.front(), std::numeric_limits<double>::infinity()};
  double base = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    const long n = std::max<long>(1, static_cast<long>(samples * seg / total));
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      const Vec2 q = pts[i - 1] + (pts[i] - pts[i - 1]) * t;
      const double d = distance(q, p);
      if (d < best.dist) best = {base + t * seg, q, d};
    }
    base += seg;
  }
  return best;
}

}  // namespace

TEST(Angle, NormalizeIntoHalfOpenRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(normalize_angle(-7.0), -7.0 + 2 * kPi, 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double n = normalize_angle(a);
    EXPECT_GT(n, -kPi);
    EXPECT_LE(n, kPi);
    EXPECT_NEAR(std::remainder(a - n, 2 * kPi), 0.0, 1e-9);
  }
}

TEST(Pose, ConstructorNormalizesYaw) {
  const Pose2D p(1.0, 2.0, 3 * kPi);
  EXPECT_NEAR(p.yaw, kPi, 1e-12);
}

TEST(Polyline, RejectsDegenerateInput) {
  EXPECT_THROW(Polyline({{0, 0}}), InvalidGeometry);
  EXPECT_THROW(Polyline({{1, 1}, {1, 1}}), InvalidGeometry);
  EXPECT_THROW(Polyline({{0, 0}, {std::nan(""), 1}}), InvalidGeometry);
}

TEST(Resample, StraightLineBySpacing) {
  const Polyline line({{0, 0}, {10, 0}});
  const auto pts = resample_by_spacing(line, 2.5);
  const std::vector<double> xs{0, 2.5, 5, 7.5, 10};
  ASSERT_EQ(pts.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(pts[i].x, xs[i], 1e-12);
    EXPECT_NEAR(pts[i].y, 0.0, 1e-12);
  }
}

TEST(Resample, LShapeByCount) {
  const Polyline line({{0, 0}, {3, 0}, {3, 4}});
  const auto pts = resample_by_count(line, 8);
  ASSERT_EQ(pts.size(), 8u);
  // Length 7 split into 7 gaps: index 4 sits at arc length 4.
  EXPECT_NEAR(pts[4].x, 3.0, 1e-12);
  EXPECT_NEAR(pts[4].y, 1.0, 1e-12);
  EXPECT_EQ(pts.front(), (Vec2{0, 0}));
  EXPECT_NEAR(distance(pts.back(), {3, 4}), 0.0, 1e-12);
}

TEST(Resample, InvalidArguments) {
  const Polyline line({{0, 0}, {1, 0}});
  EXPECT_THROW(resample_by_spacing(line, 0.0), InvalidInput);
  EXPECT_THROW(resample_by_count(line, 1), InvalidInput);
}

TEST(Resample, PointsLieOnLineWithEqualGaps) {
  const Polyline line({{0, 0}, {4, 0}, {4, 3}, {10, 11}});
  const auto pts = resample_by_spacing(line, 0.7);
  EXPECT_EQ(pts.front(), line.points().front());
  std::vector<double> s;
  for (const auto& p : pts) {
    const Projection pr = line.project(p);
    EXPECT_LT(pr.distance, 1e-9);
    s.push_back(pr.s);
  }
  for (std::size_t i = 1; i + 1 < s.size(); ++i) EXPECT_NEAR(s[i] - s[i - 1], 0.7, 1e-9);
  EXPECT_LE(s.back() - s[s.size() - 2], 0.7 + 1e-9);
}

TEST(Resample, StraightLineLengthPreserved) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> sp(0.05, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const Polyline line({a, b});
    const auto pts = resample_by_spacing(line, sp(rng));
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
    EXPECT_NEAR(total / line.length(), 1.0, 1e-9);
  }
}

TEST(Projection, PerpendicularDropAndClamp) {
  const Polyline line({{0, 0}, {10, 0}});
  Projection p = line.project({5, 2});
  EXPECT_NEAR(p.s, 5.0, 1e-12);
  EXPECT_NEAR(p.d, 2.0, 1e-12);
  p = line.project({15, 0});
  EXPECT_NEAR(p.s, 10.0, 1e-12);
  EXPECT_NEAR(p.d, 0.0, 1e-12);
  p = line.project({5, -3});
  EXPECT_NEAR(p.d, -3.0, 1e-12);
}

TEST(Projection, CornerMatchesDenseSamplingOracle) {
  const std::vector<Vec2> pts{{0, 0}, {3, 0}, {3, 4}};
  const Polyline line(pts);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec2 p{3.0 + u(rng), u(rng)};
    const DenseNearest oracle = dense_nearest(pts, p, 1'000'000);
    const Projection pr = line.project(p);
    EXPECT_NEAR(pr.distance, oracle.dist, 1e-6);
    EXPECT_NEAR(distance(line.point_at(pr.s), oracle.point), 0.0, 1e-5);
  }
}

TEST(Projection, IdempotentOnLine) {
  const Polyline line({{0, 0}, {5, 1}, {7, 6}, {2, 9}});
  for (double s = 0.0; s <= line.length(); s += 0.37) {
    const Projection pr = line.project(line.point_at(s));
    EXPECT_NEAR(pr.d, 0.0, 1e-9);
    EXPECT_NEAR(pr.s, s, 1e-9);
  }
}

TEST(Projection, CornerTieGoesToSmallerS) {
  // Point equidistant from the two legs of a right-angle corner's outside.
  const Polyline line({{0, 0}, {10, 0}, {10, 10}});
  const Projection pr = line.project({11, -1});
  EXPECT_NEAR(pr.s, 10.0, 1e-12);
  EXPECT_EQ(pr.segment, 0u);
}

TEST(Projection, WindowedSearchStaysInWindow) {
  const Polyline line({{0, 0}, {10, 0}, {10, 10}, {0, 10}});
  const Projection pr = line.project({1, 5}, 25.0, 30.0);
  EXPECT_GE(pr.s, 25.0 - 1e-9);
}

TEST(Frames, IdentityFrameLeavesPointsUnchanged) {
  const std::vector<Vec2> pts{{1, 2}, {-3, 4}};
  const FramedPoints f = to_frame(pts, Pose2D{});
  EXPECT_EQ(f.points, pts);
}

TEST(Frames, HandRotation) {
  const std::vector<Vec2> pts{{1, 1}};
  const FramedPoints f = to_frame(pts, Pose2D(1, 0, kPi / 2));
  EXPECT_NEAR(f.points[0].x, 1.0, 1e-12);
  EXPECT_NEAR(f.points[0].y, 0.0, 1e-12);
}

TEST(Frames, RoundTripAndIsometry) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pts(10);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const Pose2D frame(u(rng), u(rng), ang(rng));
    const FramedPoints f = to_frame(pts, frame);
    const auto back = to_world(f);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT(distance(back[i], pts[i]), 1e-9);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        EXPECT_NEAR(distance(f.points[i], f.points[j]), distance(pts[i], pts[j]), 1e-9);
  }
}

TEST(Polyline, SliceIsExactAtCuts) {
  const Polyline line({{0, 0}, {4, 0}, {4, 4}});
  const Polyline part = line.slice(2.0, 6.0);
  EXPECT_NEAR(part.length(), 4.0, 1e-12);
  EXPECT_NEAR(distance(part.points().front(), {2, 0}), 0.0, 1e-12);
  EXPECT_NEAR(distance(part.points().back(), {4, 2}), 0.0, 1e-12);
}

TEST(Polyline, PointAndHeading) {
  const Polyline line({{0, 0}, {4, 0}, {4, 4}});
  EXPECT_NEAR(line.heading_at(1.0), 0.0, 1e-12);
  EXPECT_NEAR(line.heading_at(5.0), kPi / 2, 1e-12);
  EXPECT_EQ(line.point_at(-3.0), (Vec2{0, 0}));
  EXPECT_EQ(line.point_at(100.0), (Vec2{4, 4}));
}

TEST(Boxes, OverlapIsSymmetricAndMatchesSamplingOracle) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> pos(-4.0, 4.0), ext(0.2, 2.5), ang(-kPi, kPi), t(-1.0, 1.0);
  int agree = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const OrientedBox a{{pos(rng), pos(rng)}, ang(rng), ext(rng), ext(rng)};
    const OrientedBox b{{pos(rng), pos(rng)}, ang(rng), ext(rng), ext(rng)};
    EXPECT_EQ(overlaps(a, b), overlaps(b, a));
    // Sampling oracle: any interior point of b inside a means overlap.
    bool sampled = false;
    for (int i = 0; i <= 60 && !sampled; ++i)
      for (int j = 0; j <= 60 && !sampled; ++j) {
        const Vec2 local{b.half_length * (2.0 * i / 60 - 1), b.half_width * (2.0 * j / 60 - 1)};
        const Vec2 p = b.center + rotate(local, b.yaw);
        const Vec2 q = rotate(p - a.center, -a.yaw);
        sampled = std::abs(q.x) <= a.half_length && std::abs(q.y) <= a.half_width;
      }
    if (sampled) EXPECT_TRUE(overlaps(a, b));
    agree += sampled == overlaps(a, b);
  }
  EXPECT_GT(agree, 290);
}

TEST(Polygon, ContainsPoint) {
  const Polygon sq{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
  EXPECT_TRUE(sq.contains({1, 1}));
  EXPECT_FALSE(sq.contains({3, 1}));
  EXPECT_FALSE(sq.contains({-0.1, 1}));
}
