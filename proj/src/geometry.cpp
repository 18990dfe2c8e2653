#include "drivebench/geometry.hpp"

#include <algorithm>
#include <limits>

#include "drivebench/error.hpp"

namespace drivebench {

double normalize_angle(double a) {
  if (!std::isfinite(a)) return a;
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidGeometry("polyline needs at least two points");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y))
      throw InvalidGeometry("polyline has a non-finite vertex");
    if (i > 0) cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], points_[i]));
  }
  if (!(cumulative_.back() > 0.0)) throw InvalidGeometry("polyline has zero length");
}

std::size_t Polyline::segment_at(double s) const {
  if (s <= 0.0) return 0;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  if (s <= 0.0) return points_.front();
  if (s >= length()) return points_.back();
  const std::size_t i = segment_at(s);
  const double len = cumulative_[i + 1] - cumulative_[i];
  if (len <= 0.0) return points_[i];
  const double t = (s - cumulative_[i]) / len;
  return points_[i] + (points_[i + 1] - points_[i]) * t;
}

Vec2 Polyline::tangent_at(double s) const {
  std::size_t i = segment_at(s);
  // Skip zero-length segments forward, then backward.
  std::size_t j = i;
  while (j + 1 < points_.size() && cumulative_[j + 1] - cumulative_[j] <= 0.0) ++j;
  if (j + 1 >= points_.size()) {
    j = i;
    while (j > 0 && cumulative_[j + 1] - cumulative_[j] <= 0.0) --j;
  }
  const Vec2 delta = points_[j + 1] - points_[j];
  const double len = delta.norm();
  return delta * (1.0 / len);
}

double Polyline::heading_at(double s) const {
  const Vec2 t = tangent_at(s);
  return std::atan2(t.y, t.x);
}

Projection Polyline::project_segments(const Vec2& p, std::size_t first, std::size_t last) const {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= last && i + 1 < points_.size(); ++i) {
    const Vec2& a = points_[i];
    const Vec2& b = points_[i + 1];
    const double len = cumulative_[i + 1] - cumulative_[i];
    if (len <= 0.0) continue;
    const Vec2 ab = b - a;
    double t = dot(p - a, ab) / (len * len);
    Vec2 foot;
    if (t <= 0.0) {
      t = 0.0;
      foot = a;
    } else if (t >= 1.0) {
      t = 1.0;
      foot = b;
    } else {
      foot = a + ab * t;
    }
    const double dist = distance(p, foot);
    if (dist < best_dist) {
      best_dist = dist;
      best.s = cumulative_[i] + t * len;
      best.d = cross(ab * (1.0 / len), p - foot);
      best.distance = dist;
      best.segment = i;
    }
  }
  return best;
}

Projection Polyline::project(const Vec2& p) const {
  return project_segments(p, 0, points_.size() - 2);
}

Projection Polyline::project(const Vec2& p, double s_lo, double s_hi) const {
  if (s_hi < s_lo) std::swap(s_lo, s_hi);
  return project_segments(p, segment_at(s_lo), segment_at(s_hi));
}

Polyline Polyline::slice(double s0, double s1) const {
  s0 = std::clamp(s0, 0.0, length());
  s1 = std::clamp(s1, 0.0, length());
  if (s1 < s0) std::swap(s0, s1);
  std::vector<Vec2> out;
  out.push_back(point_at(s0));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (cumulative_[i] > s0 && cumulative_[i] < s1) out.push_back(points_[i]);
  }
  out.push_back(point_at(s1));
  return Polyline(std::move(out));
}

std::vector<Vec2> resample_by_spacing(const Polyline& line, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw InvalidInput("resample spacing must be positive");
  const double total = line.length();
  const auto steps = static_cast<std::size_t>(std::floor(total / spacing + 1e-9));
  std::vector<Vec2> out;
  out.reserve(steps + 2);
  for (std::size_t k = 0; k <= steps; ++k) out.push_back(line.point_at(static_cast<double>(k) * spacing));
  if (static_cast<double>(steps) * spacing < total - 1e-9 * std::max(1.0, total))
    out.push_back(line.points().back());
  return out;
}

std::vector<Vec2> resample_by_count(const Polyline& line, int count) {
  if (count < 2) throw InvalidInput("resample count must be at least 2");
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(count));
  const double total = line.length();
  for (int k = 0; k < count; ++k) {
    out.push_back(k == count - 1 ? line.points().back()
                                 : line.point_at(total * k / static_cast<double>(count - 1)));
  }
  return out;
}

FramedPoints to_frame(std::span<const Vec2> world_points, const Pose2D& frame) {
  FramedPoints out{frame, {}};
  out.points.reserve(world_points.size());
  for (const auto& p : world_points) out.points.push_back(frame.to_local(p));
  return out;
}

std::vector<Vec2> to_world(const FramedPoints& framed) {
  std::vector<Vec2> out;
  out.reserve(framed.points.size());
  for (const auto& p : framed.points) out.push_back(framed.frame.to_parent(p));
  return out;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 ax = heading_vector(yaw) * half_length;
  const Vec2 ay = heading_vector(yaw + kPi / 2.0) * half_width;
  return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
}

namespace {

// Half-extent of a box projected on a unit axis.
double projected_radius(const OrientedBox& b, const Vec2& axis) {
  const Vec2 ux = heading_vector(b.yaw);
  const Vec2 uy{-ux.y, ux.x};
  return b.half_length * std::abs(dot(ux, axis)) + b.half_width * std::abs(dot(uy, axis));
}

}  // namespace

bool overlaps(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 delta = b.center - a.center;
  if (delta.norm() > a.bounding_radius() + b.bounding_radius()) return false;
  const Vec2 ua = heading_vector(a.yaw);
  const Vec2 ub = heading_vector(b.yaw);
  const std::array<Vec2, 4> axes{ua, Vec2{-ua.y, ua.x}, ub, Vec2{-ub.y, ub.x}};
  for (const auto& axis : axes) {
    const double sep = std::abs(dot(delta, axis));
    if (sep > projected_radius(a, axis) + projected_radius(b, axis)) return false;
  }
  return true;
}

bool Polygon::contains(const Vec2& p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace drivebench
