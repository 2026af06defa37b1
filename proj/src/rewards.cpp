#include "hhrl/rewards.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hhrl {

double low_reward(const SimState& state, const Eigen::Vector2d& cmd,
                  const Eigen::Vector2d& prev_cmd, double k_high, double k_low,
                  bool f_v, const RewardConfig& cfg) {
  double v = state.ego.speed();

  double r_safety = -cfg.violation_weight * (f_v ? 1.0 : 0.0) - cfg.risk_weight * (k_high + k_low);
  double r_efficiency = -std::abs(v - cfg.target_speed) / cfg.target_speed -
                        std::max(0.0, (cfg.penalty_speed - v) / cfg.penalty_speed);
  double r_consistency =
      -(cfg.cmd_weight * std::abs(cmd[0]) + cfg.delta_weight * std::abs(cmd[0] - prev_cmd[0])) -
      (cfg.cmd_weight * std::abs(cmd[1]) + cfg.delta_weight * std::abs(cmd[1] - prev_cmd[1]));

  return r_safety + r_efficiency + r_consistency;
}

double high_reward(const std::vector<double>& low_rewards, bool f_v, double r_vio) {
  if (low_rewards.empty()) throw std::invalid_argument("high_reward: empty segment");
  if (f_v) return r_vio;
  double sum = std::accumulate(low_rewards.begin(), low_rewards.end(), 0.0);
  return sum / static_cast<double>(low_rewards.size());
}

}  // namespace hhrl
