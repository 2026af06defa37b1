#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hhrl/guidance.hpp"
#include "hhrl/policies.hpp"
#include "hhrl/rewards.hpp"
#include "hhrl/safety.hpp"
#include "hhrl/sim_env.hpp"

namespace hhrl {

struct TrainConfig {
  int episodes = 300;
  double dt = 0.1;              // T^l; T^h = n_max * dt
  double horizon = 100.0;       // episode time limit [s]
  std::uint64_t seed = 1;
  int low_capacity = 100000;
  int high_capacity = 20000;
  int batch = 64;
  int low_warmup = 1000;
  int high_warmup = 200;
  double gamma = 0.99;
  double tau = 0.005;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  std::vector<int> hidden{128, 128};
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.6;    // share of episodes the decay spans
  double sigma_start = 0.3;
  double sigma_end = 0.05;
  double eta_fraction = 0.5;    // share of episodes the eta ramp spans
  int checkpoint_every = 100;
  bool safety = true;

  RoadConfig road;
  TrafficConfig traffic;
  GuidanceConfig guidance;
  ApfParams apf;
  SafetyConfig safety_cfg;
  RewardConfig reward;
  PriorParams prior;

  void validate() const;
};

// Attention weight on risk severity: linear 0 -> 1 over the first
// eta_fraction of training, then held.
double eta_schedule(int episode, const TrainConfig& cfg);
double epsilon_schedule(int episode, const TrainConfig& cfg);
double sigma_schedule(int episode, const TrainConfig& cfg);

struct Policies {
  HighPolicy high;
  LowPolicy low;
};

Policies make_policies(const TrainConfig& cfg, std::uint64_t init_seed);
void save_policies(const std::string& path, const Policies& p);
Policies load_policies(const std::string& path, const TrainConfig& cfg);

// -------- episode runner --------
// One implementation of the two-timescale loop drives training, evaluation
// and trajectory logging, so every consumer sees identical semantics.

struct RunOptions {
  bool explore = false;
  double epsilon = 0.0;
  double sigma = 0.0;
  double eta = 1.0;
  bool safety_on = true;
};

struct StepInfo {
  double t = 0.0;  // sim time after the step
  int segment = 0;
  int index = 0;   // i, 1-based within the segment
  const SimState* state = nullptr;  // post-step
  Eigen::Vector2d cmd = Eigen::Vector2d::Zero();         // executed
  Eigen::Vector2d cmd_policy = Eigen::Vector2d::Zero();  // pre-correction
  int option_exec = 1;
  double a_h_exec = 0.0;
  HybridAction updated_action;  // (o^[u], a^{h,[u]}); zeros when exhausted
  double k_high = 0.0;          // segment-level, pre-correction chosen action
  double k_low = 0.0;           // post-step, corrected + updated guidance
  double eta = 0.0;
  bool corr_high_fired = false;
  bool corr_low_fired = false;
  bool beta = false;
  bool f_v = false;
  bool exhausted = false;
  double r_low = 0.0;
  double ttc_current = 0.0;
  double ttc_target = 0.0;
  int ego_lane = 0;
  const MotionGuidance* guidance = nullptr;   // post-update
  const LowTransition* transition = nullptr;
};

struct SegmentInfo {
  HighTransition transition;  // carries the safety-corrected action
  std::vector<double> low_rewards;
  std::vector<HighCandidate> candidates;
  int chosen = 1;     // pre-correction choice, candidate index
  int corrected = 1;  // post-correction, candidate index
  bool corr_fired = false;
  int n = 0;
};

struct StepHooks {
  std::function<void(const StepInfo&)> on_step;
  std::function<void(const SegmentInfo&)> on_segment;
};

struct EpisodeResult {
  double total_reward = 0.0;
  int steps = 0;
  int segments = 0;
  bool violation = false;
  ViolationKind violation_kind = ViolationKind::none;
};

EpisodeResult run_episode(SimState& state, Policies& policies, const TrainConfig& cfg,
                          const RunOptions& opts, std::mt19937_64* explore_rng,
                          const StepHooks& hooks);

struct EpisodeLog {
  int episode = 0;
  double total_reward = 0.0;
  int steps = 0;
  int collisions = 0;
  double mean_k = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  std::vector<EpisodeLog> log;
  std::string checkpoint_path;
  std::string log_path;
  bool aborted = false;
  std::string abort_reason;
};

// Full training loop: nested two-timescale rollouts, replay buffers, one
// gradient update per environment step at each level, soft target updates,
// CSV episode log and cadence checkpoints under out_dir.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  Policies* out_policies = nullptr, const StepHooks* extra_hooks = nullptr);

}  // namespace hhrl
