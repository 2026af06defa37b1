#include "hhrl/safety.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hhrl {

double risk_potential(double dx, double dy, double rel_ax, double rel_ay,
                      const ApfParams& params) {
  double qx = dx / params.x_safe;
  double qy = dy / params.y_safe;
  double static_term = std::exp(-0.5 * (qx * qx + qy * qy));
  // The dynamic Gaussian only sees axes that are closing (negative relative
  // acceleration); open axes contribute zero displacement.
  double px = rel_ax < 0.0 ? qx : 0.0;
  double py = rel_ay < 0.0 ? qy : 0.0;
  double dynamic_term = std::exp(-0.5 * (px * px + py * py));
  return params.w1 * static_term + params.w2() * dynamic_term;
}

double risk_severity(const MotionGuidance& g, const SimState& state,
                     const ApfParams& params) {
  if (g.empty()) throw std::invalid_argument("risk: guidance has no points");

  auto slots = observed_sv_slots(state);
  bool any_sv = false;
  for (int idx : slots) any_sv |= idx >= 0;
  if (!any_sv) return 0.0;

  const VehicleState& ego = state.ego;
  int count = static_cast<int>(g.points.size());
  double total = 0.0;
  for (int j = 0; j < count; ++j) {
    double importance = 1.0 - std::exp(params.decay * (j + 1 - count));
    if (importance <= 0.0) continue;  // endpoint carries no weight
    double px = g.anchor.x + g.points[j].x();
    double py = g.anchor.y + g.points[j].y();
    double worst = 0.0;
    for (int idx : slots) {
      if (idx < 0) continue;
      const VehicleState& sv = state.svs[idx];
      double rho = risk_potential(px - sv.x, py - sv.y, sv.accel_x - ego.accel_x,
                                  sv.accel_y - ego.accel_y, params);
      worst = std::max(worst, rho);
    }
    total += importance * worst;
  }
  return total / count;
}

HighCorrection correct_high(const std::vector<HighCandidate>& candidates,
                            int chosen, double eta, double risk_threshold) {
  if (candidates.empty()) throw std::invalid_argument("correct_high: no candidates");
  if (chosen < 0 || chosen >= static_cast<int>(candidates.size())) {
    throw std::invalid_argument("correct_high: chosen index out of range");
  }

  if (eta * candidates[chosen].risk < risk_threshold) return {chosen, false};

  int best_safe = -1;
  int least_risky = 0;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (eta * candidates[i].risk < risk_threshold &&
        (best_safe < 0 || candidates[i].q > candidates[best_safe].q)) {
      best_safe = i;
    }
    if (candidates[i].risk < candidates[least_risky].risk) least_risky = i;
  }
  int pick = best_safe >= 0 ? best_safe : least_risky;
  return {pick, pick != chosen || best_safe < 0};
}

Eigen::Vector2d prior_control(const SimState& state, const MotionGuidance& g,
                              const PriorParams& params) {
  const VehicleState& ego = state.ego;

  IdmParams idm = state.traffic.idm;
  idm.headway = params.headway;
  const VehicleState* leader = lane_leader(state, ego.lane_id, ego.x, -2);
  VehicleState self = ego;
  // Conservative target: never try to outrun the current leader.
  self.target_speed = leader != nullptr ? std::max(0.1, leader->v_x) : params.fallback_speed;
  double accel = idm_accel(self, leader, idm, state.road);

  // Stanley law onto the guidance curve, which lives in the ego-anchored
  // road-aligned frame: cross-track error and tangent at x = 0.
  double cross_track = g.empty() ? 0.0 : quintic_eval(g.coeffs, 0.0);
  double tangent = g.empty() ? 0.0 : std::atan(quintic_slope(g.coeffs, 0.0));
  double heading_err = tangent - ego.heading;
  double steer = heading_err +
                 std::atan(params.stanley_gain * cross_track / (ego.speed() + params.v_soft));
  steer = std::min(kMaxSteer, std::max(-kMaxSteer, steer));
  accel = std::min(kMaxAccel, std::max(-kMaxAccel, accel));
  return {steer, accel};
}

LowCorrection correct_low(const Eigen::Vector2d& policy_action,
                          const Eigen::Vector2d& prior_action, double k_low,
                          double eta, double risk_threshold,
                          const std::function<double(const Eigen::Vector2d&)>& q_value) {
  if (eta * k_low < risk_threshold) return {policy_action, false};
  double q_policy = q_value(policy_action);
  double q_prior = q_value(prior_action);
  if (q_prior > q_policy) return {prior_action, true};
  return {policy_action, true};
}

bool terminate(bool f_v, int i, int n_max, double k_low, double k_high,
               double eta, double risk_threshold) {
  bool escalated = eta * k_low >= risk_threshold && eta * k_high < risk_threshold;
  return f_v || i == n_max || escalated;
}

}  // namespace hhrl
