#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace drivebench {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of a x b; positive when b is counter-clockwise of a.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline Vec2 heading_vector(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }
/// Rotates v counter-clockwise by `angle`.
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Planar pose. Yaw is counter-clockwise from +x and kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double yaw_) : x(x_), y(y_), yaw(normalize_angle(yaw_)) {}
  Pose2D(const Vec2& p, double yaw_) : Pose2D(p.x, p.y, yaw_) {}

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2D&) const = default;

  /// Maps a point expressed in this pose's frame into the parent frame.
  Vec2 to_parent(const Vec2& local) const { return position() + rotate(local, yaw); }
  /// Maps a parent-frame point into this pose's frame.
  Vec2 to_local(const Vec2& world) const { return rotate(world - position(), -yaw); }
  /// Composes a child pose given in this frame: returns it in the parent frame.
  Pose2D compose(const Pose2D& child) const {
    return Pose2D(to_parent(child.position()), yaw + child.yaw);
  }
};

/// Result of projecting a point onto a polyline.
struct Projection {
  double s = 0.0;  ///< arc length of the foot point
  double d = 0.0;  ///< signed lateral offset, left of the local tangent is positive
  double distance = 0.0;  ///< Euclidean distance to the foot point
  std::size_t segment = 0;
};

/// Immutable arc-length parameterized polyline.
class Polyline {
 public:
  /// Throws InvalidGeometry for fewer than two points, non-finite
  /// coordinates, or zero total length.
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& cumulative_arclength() const { return cumulative_; }
  double length() const { return cumulative_.back(); }
  std::size_t size() const { return points_.size(); }

  /// Point at arc length s, clamped to [0, length].
  Vec2 point_at(double s) const;
  /// Unit tangent at arc length s (of the segment containing s).
  Vec2 tangent_at(double s) const;
  double heading_at(double s) const;

  /// Closest point over the whole polyline. Ties go to the smaller s.
  Projection project(const Vec2& p) const;
  /// Closest point restricted to segments overlapping [s_lo, s_hi].
  Projection project(const Vec2& p, double s_lo, double s_hi) const;

  /// Index of the segment containing arc length s.
  std::size_t segment_at(double s) const;

  /// Sub-polyline covering [s0, s1] (clamped); exact at the cut points.
  Polyline slice(double s0, double s1) const;

  bool operator==(const Polyline& o) const { return points_ == o.points_; }

 private:
  Projection project_segments(const Vec2& p, std::size_t first, std::size_t last) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

/// Points at a fixed arc-length spacing starting at the polyline start; the
/// final point is the polyline end (its gap may be shorter).
std::vector<Vec2> resample_by_spacing(const Polyline& line, double spacing);
/// `count` points with equal arc-length gaps spanning the whole polyline.
std::vector<Vec2> resample_by_count(const Polyline& line, int count);

/// Points expressed in the frame of `frame`.
struct FramedPoints {
  Pose2D frame;
  std::vector<Vec2> points;
};

FramedPoints to_frame(std::span<const Vec2> world_points, const Pose2D& frame);
std::vector<Vec2> to_world(const FramedPoints& framed);

/// Oriented rectangle used for footprints and corridor tests.
struct OrientedBox {
  Vec2 center;
  double yaw = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const;
  double bounding_radius() const { return std::hypot(half_length, half_width); }
};

/// Separating-axis overlap test; touching edges count as overlap.
bool overlaps(const OrientedBox& a, const OrientedBox& b);

/// Simple polygon (vertices in order, implicitly closed).
struct Polygon {
  std::vector<Vec2> vertices;
  bool contains(const Vec2& p) const;
  bool operator==(const Polygon&) const = default;
};

}  // namespace drivebench
