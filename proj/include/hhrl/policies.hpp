#pragma once

#include <Eigen/Core>
#include <array>
#include <random>
#include <vector>

#include "hhrl/guidance.hpp"
#include "hhrl/numerics.hpp"
#include "hhrl/types.hpp"

namespace hhrl {

struct Exploration {
  bool enabled = false;
  double epsilon = 0.0;  // discrete option resample probability
  double sigma = 0.0;    // Gaussian noise scale, in half-range units
  std::mt19937_64* rng = nullptr;
};

// Maps a raw actor output into [lo, hi] via tanh rescale.
inline double squash(double u, double lo, double hi) {
  return lo + 0.5 * (std::tanh(u) + 1.0) * (hi - lo);
}
inline double squash_grad(double u, double lo, double hi) {
  double t = std::tanh(u);
  return 0.5 * (1.0 - t * t) * (hi - lo);
}

// Parameterized actor-critic over the hybrid space: the actor emits one raw
// a^h head per option, the critic scores (s, one-hot o, a^h / a_scale).
struct HighPolicy {
  Mlp actor, critic, actor_target, critic_target;
  AdamState actor_opt, critic_opt;
  double gamma = 0.99;
  double tau = 0.005;
  double a_scale = 160.0;
  int obs_dim = kObsDim;
};

HighPolicy make_high_policy(int obs_dim, const std::vector<int>& hidden,
                            double lr_actor, double lr_critic, double gamma,
                            double tau, double a_scale, std::mt19937_64& rng);

// Deterministic low-level actor-critic over extend-states.
struct LowPolicy {
  Mlp actor, critic, actor_target, critic_target;
  AdamState actor_opt, critic_opt;
  double gamma = 0.99;
  double tau = 0.005;
  int z_dim = 0;
};

LowPolicy make_low_policy(int z_dim, const std::vector<int>& hidden,
                          double lr_actor, double lr_critic, double gamma,
                          double tau, std::mt19937_64& rng);

double critic_value_high(const HighPolicy& p, const Observation& s, int option,
                         double a_h, bool use_target = false);
double critic_value_low(const LowPolicy& p, const Eigen::VectorXd& z,
                        const Eigen::Vector2d& a, bool use_target = false);

struct HighChoice {
  HybridAction action;
  int option = 1;
  std::array<double, 3> head_a{};  // squashed a^h per option
  std::array<double, 3> q{};       // critic score per option (unavailable: -inf)
};

HighChoice select_high(const HighPolicy& p, const Observation& s,
                       const HybridActionSpace& bounds, const Exploration& ex);

// y(Q^h) = r + gamma * max_o Q*^h(s', o, mu*^h(s')); just r on terminal
// (violation) transitions.
double high_critic_target(double r, const Observation& s_next, const HighPolicy& p,
                          const HybridActionSpace& bounds_next, bool terminal);

struct HighTransition {
  Observation s;
  int option = 1;        // safety-corrected o^[s], as a slot index
  double a_h = 0.0;      // safety-corrected a^{h,[s]}
  double r = 0.0;
  Observation s_next;
  HybridActionSpace bounds;       // at s
  HybridActionSpace bounds_next;  // at s'
  bool terminal = false;          // f_v at segment end
};

struct UpdateInfo {
  double critic_loss = 0.0;
  double actor_value = 0.0;  // mean objective the actor ascends
};

UpdateInfo update_high(HighPolicy& p, const std::vector<HighTransition>& batch);

// Extend-state z^l = (s^l, G^[u]): observation followed by num_points
// guidance pairs normalized like positions; consumed slots repeat the
// endpoint so the layout stays fixed-size.
Eigen::VectorXd make_extend_state(const Observation& obs, const MotionGuidance& g,
                                  const RoadConfig& road, const GuidanceConfig& cfg);

inline int extend_state_dim(const GuidanceConfig& cfg) {
  return kObsDim + 2 * cfg.num_points;
}

Eigen::Vector2d select_low(const LowPolicy& p, const Eigen::VectorXd& z,
                           const Exploration& ex);

struct LowTransition {
  Eigen::VectorXd z;
  Eigen::Vector2d a = Eigen::Vector2d::Zero();  // executed a^{l,[s]}
  double r = 0.0;
  Eigen::VectorXd z_next;
  bool beta = false;
  bool violation = false;   // f_v at the next state
  VehicleState ego_next;    // rebuild context for the beta = 1 bootstrap
};

struct LowTargetCtx {
  RoadConfig road;
  GuidanceConfig guidance;
};

// y(Q^l) per the two-branch optimal value: plain bootstrap inside a segment;
// at beta = 1 the extend-state is rebuilt from the high-level target policy
// before bootstrapping; violations do not bootstrap.
double low_target(const LowTransition& t, const LowPolicy& low,
                  const HighPolicy& high, const LowTargetCtx& ctx);

UpdateInfo update_low(LowPolicy& low, const std::vector<LowTransition>& batch,
                      const HighPolicy& high, const LowTargetCtx& ctx);

}  // namespace hhrl
