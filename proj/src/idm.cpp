#include "drivebench/idm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drivebench/error.hpp"

namespace drivebench {

void IdmParams::validate() const {
  const double fields[] = {desired_speed, time_headway, min_gap,       max_accel,
                           comfort_decel, exponent,     emergency_decel};
  for (double f : fields) {
    if (!(f > 0.0) || !std::isfinite(f)) throw InvalidConfig("IDM parameters must be positive and finite");
  }
  if (exponent < 1.0) throw InvalidConfig("IDM exponent must be >= 1");
}

std::string_view to_string(HazardKind k) {
  switch (k) {
    case HazardKind::None: return "none";
    case HazardKind::LeadingVehicle: return "leading_vehicle";
    case HazardKind::Walker: return "walker";
    case HazardKind::RedLight: return "red_light";
    case HazardKind::StopSign: return "stop_sign";
  }
  return "none";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Front: return "front";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Oncoming: return "oncoming";
  }
  return "front";
}

HazardKind hazard_kind_from_string(std::string_view s) {
  for (auto k : {HazardKind::None, HazardKind::LeadingVehicle, HazardKind::Walker,
                 HazardKind::RedLight, HazardKind::StopSign}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown hazard kind '" + std::string(s) + "'");
}

Direction direction_from_string(std::string_view s) {
  for (auto d : {Direction::Front, Direction::Left, Direction::Right, Direction::Oncoming}) {
    if (to_string(d) == s) return d;
  }
  throw ParseError("unknown direction '" + std::string(s) + "'");
}

IdmResult idm_acceleration(double v, const Hazard& hazard, const IdmParams& p) {
  if (!std::isfinite(v)) throw InvalidInput("IDM speed must be finite");
  const double free_term = 1.0 - std::pow(std::max(v, 0.0) / p.desired_speed, p.exponent);
  if (!hazard.present()) {
    return {std::clamp(p.max_accel * free_term, -p.emergency_decel, p.max_accel), false};
  }
  if (!(hazard.gap > 0.0)) return {-p.emergency_decel, true};
  const double desired_gap =
      p.min_gap +
      std::max(0.0, v * p.time_headway +
                        v * hazard.closing_speed / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
  const double ratio = desired_gap / hazard.gap;
  const double a = p.max_accel * (free_term - ratio * ratio);
  return {std::clamp(a, -p.emergency_decel, p.max_accel), false};
}

}  // namespace drivebench
