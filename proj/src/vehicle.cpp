#include "drivebench/vehicle.hpp"

#include <algorithm>
#include <cmath>

#include "drivebench/error.hpp"

namespace drivebench {

OrientedBox VehicleState::footprint() const {
  const Vec2 center = pose.position() + heading_vector(pose.yaw) * center_offset();
  return {center, pose.yaw, half_extents.x, half_extents.y};
}

VehicleState step_vehicle(const VehicleState& state, double accel, double steer, double dt,
                          double max_steer) {
  if (!std::isfinite(accel) || !std::isfinite(steer) || !std::isfinite(dt))
    throw InvalidInput("step_vehicle: non-finite input");
  if (!(dt > 0.0)) throw InvalidInput("step_vehicle: dt must be positive");
  if (std::abs(steer) > max_steer) throw InvalidInput("step_vehicle: steer exceeds max_steer");
  if (!(state.wheelbase > 0.0)) throw InvalidInput("step_vehicle: wheelbase must be positive");

  VehicleState next = state;
  const double v = state.speed;
  const double yaw_next = state.pose.yaw + v / state.wheelbase * std::tan(steer) * dt;
  // Midpoint heading keeps constant-curvature motion second-order accurate.
  const double yaw_mid = 0.5 * (state.pose.yaw + yaw_next);
  next.pose = Pose2D(state.pose.x + v * std::cos(yaw_mid) * dt, state.pose.y + v * std::sin(yaw_mid) * dt,
                     yaw_next);
  next.speed = std::max(0.0, v + accel * dt);
  return next;
}

}  // namespace drivebench
