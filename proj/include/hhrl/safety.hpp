#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "hhrl/guidance.hpp"
#include "hhrl/sim_env.hpp"

namespace hhrl {

struct ApfParams {
  double w1 = 0.7;      // weight of the static Gaussian; w2 = 1 - w1
  double x_safe = 15.0; // X_s [m]
  double y_safe = 2.0;  // Y_s [m]
  double decay = 0.3;   // K_r

  double w2() const { return 1.0 - w1; }
  void validate() const {
    if (w1 < 0.5 || w1 > 1.0) throw std::invalid_argument("apf: w1 must be in [0.5, 1]");
    if (x_safe <= 0.0 || y_safe <= 0.0) throw std::invalid_argument("apf: safe distances must be positive");
    if (decay <= 0.0) throw std::invalid_argument("apf: decay must be positive");
  }
};

struct SafetyConfig {
  double risk_threshold = 0.5;  // K_th
  int n_max = 10;
  double ttc_cap = 10.0;

  void validate() const {
    if (risk_threshold <= 0.0 || risk_threshold > 1.0) {
      throw std::invalid_argument("safety: risk_threshold must be in (0, 1]");
    }
    if (n_max < 1) throw std::invalid_argument("safety: n_max must be >= 1");
    if (ttc_cap <= 0.0) throw std::invalid_argument("safety: ttc_cap must be positive");
  }
};

// Risk potential of one displaced point relative to one SV. The second
// Gaussian only sees axes along which the relative acceleration is negative
// (closing).
double risk_potential(double dx, double dy, double rel_ax, double rel_ay,
                      const ApfParams& params);

// APF risk severity K of a motion guidance against the up-to-six observed
// SVs. Distance-decayed weights make the nearest points dominate; K = 0
// when no SV is present, and K < 1 always.
double risk_severity(const MotionGuidance& g, const SimState& state,
                     const ApfParams& params);

struct HighCandidate {
  int option = 1;        // slot in the fixed {-w_r, 0, +w_r} layout
  double lateral = 0.0;
  double longitudinal = 0.0;
  double q = 0.0;        // Q^h at this candidate
  double risk = 0.0;     // K^h of its guidance
};

struct HighCorrection {
  int index = 0;       // selected candidate
  bool fired = false;  // correction replaced the chosen action
};

// High-level correction: keep the chosen candidate while its weighted risk
// is below threshold; otherwise the best-Q member of the safe set, or the
// minimum-risk candidate when the safe set is empty.
HighCorrection correct_high(const std::vector<HighCandidate>& candidates,
                            int chosen, double eta, double risk_threshold);

struct PriorParams {
  double stanley_gain = 0.5;
  double v_soft = 0.1;          // speed softening in the Stanley term [m/s]
  double headway = 2.0;         // conservative IDM headway [s]
  double fallback_speed = 20.0; // desired speed with no leader [m/s]
};

// Conservative prior controller: IDM acceleration against the current-lane
// leader plus Stanley steering onto the guidance curve. Output within A^l.
Eigen::Vector2d prior_control(const SimState& state, const MotionGuidance& g,
                              const PriorParams& params);

struct LowCorrection {
  Eigen::Vector2d action;
  bool fired = false;
};

// Low-level correction: below threshold the policy action stands; above it
// the critic arbitrates between the policy action and the prior action.
LowCorrection correct_low(const Eigen::Vector2d& policy_action,
                          const Eigen::Vector2d& prior_action, double k_low,
                          double eta, double risk_threshold,
                          const std::function<double(const Eigen::Vector2d&)>& q_value);

// Safety-aware termination: violation, step budget, or risk escalation that
// the high-level correction did not already absorb.
bool terminate(bool f_v, int i, int n_max, double k_low, double k_high,
               double eta, double risk_threshold);

}  // namespace hhrl
