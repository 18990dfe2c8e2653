#pragma once

#include "drivebench/geometry.hpp"

namespace drivebench {

/// Ego vehicle. The pose is the rear-axle reference point; the footprint
/// centre sits half a wheelbase ahead of it.
struct VehicleState {
  Pose2D pose;
  double speed = 0.0;           ///< m/s, never negative
  double wheelbase = 2.9;       ///< m
  Vec2 half_extents{2.45, 1.05};  ///< (length/2, width/2), m

  double center_offset() const { return 0.5 * wheelbase; }
  /// Distance from the rear axle to the front bumper.
  double front_offset() const { return center_offset() + half_extents.x; }
  OrientedBox footprint() const;

  bool operator==(const VehicleState&) const = default;
};

inline constexpr double kDefaultMaxSteer = 1.22;

/// Actuation for one tick: front-wheel angle and longitudinal acceleration.
struct ControlCommand {
  double steer = 0.0;  ///< rad, positive turns left
  double accel = 0.0;  ///< m/s^2, negative brakes
  bool operator==(const ControlCommand&) const = default;
};

/// Kinematic bicycle step about the rear axle. Throws InvalidInput for
/// non-finite inputs, dt <= 0 or |steer| > max_steer.
VehicleState step_vehicle(const VehicleState& state, double accel, double steer, double dt,
                          double max_steer = kDefaultMaxSteer);

}  // namespace drivebench
