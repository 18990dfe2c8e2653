#pragma once

#include <string_view>

namespace drivebench {

/// Intelligent Driver Model parameters.
struct IdmParams {
  double desired_speed = 8.3;     ///< v0, m/s
  double time_headway = 1.0;      ///< T, s
  double min_gap = 4.0;           ///< s0, m
  double max_accel = 2.0;         ///< a_max, m/s^2
  double comfort_decel = 4.0;     ///< b, m/s^2
  double exponent = 4.0;          ///< delta
  double emergency_decel = 8.0;   ///< clamp floor, m/s^2

  /// Throws InvalidConfig unless all fields are positive and exponent >= 1.
  void validate() const;
  bool operator==(const IdmParams&) const = default;
};

enum class HazardKind { None, LeadingVehicle, Walker, RedLight, StopSign };
enum class Direction { Front, Left, Right, Oncoming };

std::string_view to_string(HazardKind k);
std::string_view to_string(Direction d);
HazardKind hazard_kind_from_string(std::string_view s);
Direction direction_from_string(std::string_view s);

/// The object the IDM reacts to. Traffic controls appear as zero-speed
/// virtual leaders at their stop line.
struct Hazard {
  HazardKind kind = HazardKind::None;
  double gap = 0.0;            ///< bumper-to-object distance along the path, m
  double closing_speed = 0.0;  ///< ego speed minus object speed along the path, m/s
  Direction source = Direction::Front;
  int actor_id = -1;           ///< -1 for virtual leaders and none

  bool present() const { return kind != HazardKind::None; }
  bool operator==(const Hazard&) const = default;
};

struct IdmResult {
  double accel = 0.0;
  bool emergency = false;  ///< set when the gap had already closed
};

/// a = a_max [1 - (v/v0)^delta - (s*/s)^2] with
/// s* = s0 + v T + v dv / (2 sqrt(a_max b)); the interaction term is dropped
/// when there is no hazard. Result clamped to [-emergency_decel, a_max].
IdmResult idm_acceleration(double v, const Hazard& hazard, const IdmParams& params);

}  // namespace drivebench
