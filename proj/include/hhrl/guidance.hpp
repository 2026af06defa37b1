#pragma once

#include <Eigen/Core>
#include <vector>

#include "hhrl/types.hpp"

namespace hhrl {

// High-level hybrid action: a discrete lateral lane offset (one of
// {-w_r, 0, +w_r}, +w_r pointing toward higher lane indices) and a
// continuous longitudinal endpoint distance.
struct HybridAction {
  double lateral = 0.0;       // o [m]
  double longitudinal = 0.0;  // a^h [m]
};

// Option slots are fixed: 0 = shift right (-w_r), 1 = keep, 2 = shift left.
inline int option_of_offset(double offset, double lane_width) {
  return static_cast<int>(std::lround(offset / lane_width)) + 1;
}
inline double offset_of_option(int option, double lane_width) {
  return (option - 1) * lane_width;
}

struct HybridActionSpace {
  double lane_width = 4.0;
  std::array<bool, 3> available{false, true, false};
  double a_min = 0.0;
  double a_max = 0.0;

  double offset(int option) const { return offset_of_option(option, lane_width); }
  bool contains(const HybridAction& a) const {
    int opt = option_of_offset(a.lateral, lane_width);
    return opt >= 0 && opt < 3 && available[static_cast<std::size_t>(opt)] &&
           a.longitudinal >= a_min - 1e-9 && a.longitudinal <= a_max + 1e-9;
  }
};

// Quintic-curve motion guidance in the ego-anchored road-aligned frame.
// points[0] = (0, 0) at construction; anchor holds the world pose the frame
// is pinned to and moves with every incremental update.
struct MotionGuidance {
  std::vector<Eigen::Vector2d> points;
  Eigen::Matrix<double, 6, 1> coeffs = Eigen::Matrix<double, 6, 1>::Zero();  // c0..c5
  double end_heading = 0.0;  // phi_g
  Pose anchor;

  bool empty() const { return points.empty(); }
  const Eigen::Vector2d& endpoint() const { return points.back(); }
};

inline double quintic_eval(const Eigen::Matrix<double, 6, 1>& c, double x) {
  double y = 0.0;
  for (int m = 5; m >= 0; --m) y = y * x + c[m];
  return y;
}
inline double quintic_slope(const Eigen::Matrix<double, 6, 1>& c, double x) {
  double y = 0.0;
  for (int m = 5; m >= 1; --m) y = y * x + m * c[m];
  return y;
}
inline double quintic_curv2(const Eigen::Matrix<double, 6, 1>& c, double x) {
  // second derivative
  double y = 0.0;
  for (int m = 5; m >= 2; --m) y = y * x + m * (m - 1) * c[m];
  return y;
}

HybridActionSpace hybrid_bounds(const VehicleState& ego, const RoadConfig& road,
                                const GuidanceConfig& cfg);

// Psi: solves the quintic boundary system and samples cfg.num_points points
// uniformly in x. Throws std::invalid_argument for a_h <= 0.
MotionGuidance build_guidance(const HybridAction& action, const VehicleState& ego,
                              const RoadConfig& road, const GuidanceConfig& cfg);

// Psi^-1: lane-quantized lateral offset of the endpoint plus its
// longitudinal distance. Throws std::invalid_argument if the endpoint is
// not ahead of the ego.
HybridAction invert_guidance(const MotionGuidance& g, const VehicleState& ego,
                             const RoadConfig& road);

struct GuidanceUpdate {
  MotionGuidance guidance;
  HybridAction action;      // (o^[u], a^{h,[u]})
  bool exhausted = false;   // ego passed the endpoint; termination hint
};

// Re-expresses the guidance in the frame anchored at new_pose (same world
// locations), drops consumed points (x <= 0) and re-derives the observed
// hybrid action, relabeling o across lane-divider crossings.
GuidanceUpdate update_guidance(const MotionGuidance& g, const Pose& old_pose,
                               const Pose& new_pose, const RoadConfig& road);

}  // namespace hhrl
