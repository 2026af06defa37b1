#pragma once

#include <Eigen/Core>
#include <vector>

#include "hhrl/sim_env.hpp"

namespace hhrl {

struct RewardConfig {
  double target_speed = 20.0;      // v_*
  double penalty_speed = 10.0;     // v_p
  double violation_reward = -10.0; // R_vio
  double violation_weight = 10.0;
  double risk_weight = 5.0;
  double cmd_weight = 0.5;
  double delta_weight = 0.2;

  void validate() const {
    if (penalty_speed <= 0.0 || penalty_speed >= target_speed) {
      throw std::invalid_argument("reward: need 0 < penalty_speed < target_speed");
    }
    if (violation_reward >= 0.0) throw std::invalid_argument("reward: violation_reward must be negative");
  }
};

// R^l: safety + efficiency + action-consistency terms. Non-positive by
// construction; zero only for ideal cruising.
double low_reward(const SimState& state, const Eigen::Vector2d& cmd,
                  const Eigen::Vector2d& prev_cmd, double k_high, double k_low,
                  bool f_v, const RewardConfig& cfg);

// r^h: mean of the segment's low rewards, fully replaced by R_vio on
// violation so the penalty is not diluted. Throws on an empty list.
double high_reward(const std::vector<double>& low_rewards, bool f_v, double r_vio);

}  // namespace hhrl
