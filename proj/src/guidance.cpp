#include "hhrl/guidance.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace hhrl {

HybridActionSpace hybrid_bounds(const VehicleState& ego, const RoadConfig& road,
                                const GuidanceConfig& cfg) {
  HybridActionSpace space;
  space.lane_width = road.lane_width;
  space.available = {ego.lane_id > 0, true, ego.lane_id < road.lane_count - 1};

  double v = ego.speed();
  double w = road.lane_width;
  double turn_term = std::sqrt(4.0 * road.min_turn_radius * w - w * w);
  double brake_term = v * v / (2.0 * road.max_brake);
  space.a_min = std::max(cfg.min_floor, std::min(turn_term, brake_term));
  space.a_max = std::min(std::exp(std::abs(v) + w), cfg.x_cap);
  space.a_max = std::max(space.a_max, space.a_min);
  return space;
}

MotionGuidance build_guidance(const HybridAction& action, const VehicleState& ego,
                              const RoadConfig& road, const GuidanceConfig& cfg) {
  double length = action.longitudinal;
  if (length <= 0.0) throw std::invalid_argument("guidance: a_h must be positive");

  int target_lane = ego.lane_id + static_cast<int>(std::lround(action.lateral / road.lane_width));
  target_lane = std::max(0, std::min(road.lane_count - 1, target_lane));
  // Endpoint on the target lane's centerline so guidance ends lane-centered.
  double dy_target = road.lane_center(target_lane) - ego.y;

  // Boundary system in the scaled variable u = x / a_h; keeps the 6x6
  // well-conditioned for any endpoint distance.
  Eigen::Matrix<double, 6, 6> system = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  system(0, 0) = 1.0;                                         // y(0) = 0
  system(1, 1) = 1.0;                                         // y'(0) = tan(phi_e)
  rhs[1] = length * std::tan(ego.heading);
  system(2, 2) = 2.0;                                         // y''(0) = 0
  for (int m = 0; m < 6; ++m) {
    system(3, m) = 1.0;                                       // y(1) = dy_target
    system(4, m) = m;                                         // y'(1) = tan(phi_g) = 0
    system(5, m) = m * (m - 1);                               // y''(1) = 0
  }
  rhs[3] = dy_target;
  Eigen::Matrix<double, 6, 1> scaled = system.fullPivLu().solve(rhs);

  MotionGuidance g;
  double pow_l = 1.0;
  for (int m = 0; m < 6; ++m) {
    g.coeffs[m] = scaled[m] / pow_l;
    pow_l *= length;
  }
  g.end_heading = 0.0;
  g.anchor = ego.pose();
  g.points.reserve(cfg.num_points);
  for (int j = 0; j < cfg.num_points; ++j) {
    double x = length * j / (cfg.num_points - 1);
    g.points.emplace_back(x, quintic_eval(g.coeffs, x));
  }
  return g;
}

HybridAction invert_guidance(const MotionGuidance& g, const VehicleState& ego,
                             const RoadConfig& road) {
  if (g.empty() || g.endpoint().x() <= 0.0) {
    throw std::invalid_argument("guidance: endpoint is not ahead of the ego");
  }
  double end_world_y = g.anchor.y + g.endpoint().y();
  int target_lane = road.lane_of(end_world_y);
  int shift = std::max(-1, std::min(1, target_lane - road.lane_of(ego.y)));
  return {shift * road.lane_width, g.endpoint().x()};
}

GuidanceUpdate update_guidance(const MotionGuidance& g, const Pose& old_pose,
                               const Pose& new_pose, const RoadConfig& road) {
  double dx = new_pose.x - old_pose.x;
  double dy = new_pose.y - old_pose.y;

  GuidanceUpdate out;
  out.guidance.end_heading = g.end_heading;
  out.guidance.anchor = new_pose;
  for (const auto& p : g.points) {
    Eigen::Vector2d moved(p.x() - dx, p.y() - dy);
    if (moved.x() <= 0.0) continue;  // consumed
    out.guidance.points.push_back(moved);
  }
  if (out.guidance.points.empty()) {
    out.exhausted = true;
    return out;
  }

  // Same curve in the shifted frame: y_new(x) = y_old(x + dx) - dy,
  // expanded via the binomial theorem so points stay on the quintic.
  Eigen::Matrix<double, 6, 1> c = Eigen::Matrix<double, 6, 1>::Zero();
  double binom[6][6] = {};
  for (int m = 0; m < 6; ++m) {
    binom[m][0] = 1.0;
    for (int k = 1; k <= m; ++k) {
      binom[m][k] = binom[m - 1][k - 1] + (k <= m - 1 ? binom[m - 1][k] : 0.0);
    }
  }
  for (int m = 0; m < 6; ++m) {
    double shift_pow = 1.0;
    for (int k = m; k >= 0; --k) {
      c[k] += g.coeffs[m] * binom[m][k] * shift_pow;
      shift_pow *= dx;
    }
  }
  c[0] -= dy;
  out.guidance.coeffs = c;

  VehicleState ego_like;
  ego_like.x = new_pose.x;
  ego_like.y = new_pose.y;
  ego_like.heading = new_pose.heading;
  ego_like.lane_id = road.lane_of(new_pose.y);
  out.action = invert_guidance(out.guidance, ego_like, road);
  return out;
}

}  // namespace hhrl
