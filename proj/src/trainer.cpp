#include "hhrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hhrl/replay.hpp"
#include "hhrl/rng.hpp"

namespace hhrl {

namespace {

// Stream ids carving independent RNG streams out of the master seed.
constexpr std::uint64_t kStreamEnv = 1000;
constexpr std::uint64_t kStreamExplore = 2;
constexpr std::uint64_t kStreamLowBuffer = 3;
constexpr std::uint64_t kStreamHighBuffer = 4;
constexpr std::uint64_t kStreamInit = 5;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  road.validate();
  traffic.validate();
  apf.validate();
  safety_cfg.validate();
  reward.validate();
  if (episodes < 0) throw std::invalid_argument("train: episodes must be >= 0");
  if (dt <= 0.0 || horizon <= 0.0) throw std::invalid_argument("train: bad timing");
  if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (low_capacity < 1 || high_capacity < 1) throw std::invalid_argument("train: bad capacity");
  if (guidance.num_points < 2) throw std::invalid_argument("train: need >= 2 guidance points");
  if (hidden.empty()) throw std::invalid_argument("train: need at least one hidden layer");
}

double eta_schedule(int episode, const TrainConfig& cfg) {
  double span = cfg.eta_fraction * cfg.episodes;
  if (span <= 0.0) return 1.0;
  return std::min(1.0, episode / span);
}

double epsilon_schedule(int episode, const TrainConfig& cfg) {
  double span = cfg.eps_fraction * cfg.episodes;
  if (span <= 0.0) return cfg.eps_end;
  double t = std::min(1.0, episode / span);
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * t;
}

double sigma_schedule(int episode, const TrainConfig& cfg) {
  double span = cfg.eps_fraction * cfg.episodes;
  if (span <= 0.0) return cfg.sigma_end;
  double t = std::min(1.0, episode / span);
  return cfg.sigma_start + (cfg.sigma_end - cfg.sigma_start) * t;
}

Policies make_policies(const TrainConfig& cfg, std::uint64_t init_seed) {
  std::mt19937_64 rng(init_seed);
  Policies p;
  p.high = make_high_policy(kObsDim, cfg.hidden, cfg.lr_actor, cfg.lr_critic, cfg.gamma,
                            cfg.tau, cfg.guidance.x_cap, rng);
  p.low = make_low_policy(extend_state_dim(cfg.guidance), cfg.hidden, cfg.lr_actor,
                          cfg.lr_critic, cfg.gamma, cfg.tau, rng);
  return p;
}

void save_policies(const std::string& path, const Policies& p) {
  save_checkpoint(path, {
                            {"high_actor", &p.high.actor},
                            {"high_critic", &p.high.critic},
                            {"high_actor_target", &p.high.actor_target},
                            {"high_critic_target", &p.high.critic_target},
                            {"low_actor", &p.low.actor},
                            {"low_critic", &p.low.critic},
                            {"low_actor_target", &p.low.actor_target},
                            {"low_critic_target", &p.low.critic_target},
                        });
}

Policies load_policies(const std::string& path, const TrainConfig& cfg) {
  auto nets = load_checkpoint(path);
  Policies p = make_policies(cfg, 0);
  auto take = [&](const std::string& name) -> Mlp {
    for (auto& n : nets) {
      if (n.name == name) return std::move(n.net);
    }
    throw std::runtime_error("checkpoint: missing network " + name);
  };
  p.high.actor = take("high_actor");
  p.high.critic = take("high_critic");
  p.high.actor_target = take("high_actor_target");
  p.high.critic_target = take("high_critic_target");
  p.low.actor = take("low_actor");
  p.low.critic = take("low_critic");
  p.low.actor_target = take("low_actor_target");
  p.low.critic_target = take("low_critic_target");
  if (p.high.actor.input_size() != kObsDim ||
      p.low.actor.input_size() != extend_state_dim(cfg.guidance)) {
    throw std::runtime_error("checkpoint: network shapes do not match the configuration");
  }
  p.high.actor_opt = make_adam(p.high.actor, cfg.lr_actor);
  p.high.critic_opt = make_adam(p.high.critic, cfg.lr_critic);
  p.low.actor_opt = make_adam(p.low.actor, cfg.lr_actor);
  p.low.critic_opt = make_adam(p.low.critic, cfg.lr_critic);
  return p;
}

EpisodeResult run_episode(SimState& state, Policies& policies, const TrainConfig& cfg,
                          const RunOptions& opts, std::mt19937_64* explore_rng,
                          const StepHooks& hooks) {
  EpisodeResult result;
  const int n_max = cfg.safety_cfg.n_max;
  const double k_th = cfg.safety_cfg.risk_threshold;

  Exploration ex;
  ex.enabled = opts.explore;
  ex.epsilon = opts.epsilon;
  ex.sigma = opts.sigma;
  ex.rng = explore_rng;

  Eigen::Vector2d prev_cmd = Eigen::Vector2d::Zero();
  bool episode_done = false;
  int segment_index = 0;

  while (!episode_done) {
    Observation s_h = observe(state);
    HybridActionSpace bounds = hybrid_bounds(state.ego, cfg.road, cfg.guidance);
    HighChoice choice = select_high(policies.high, s_h, bounds, ex);

    // One candidate per available option, at the actor's head, except the
    // chosen slot which carries the action actually selected (possibly
    // perturbed by exploration noise).
    std::vector<HighCandidate> candidates;
    std::vector<MotionGuidance> cand_guidance;
    int chosen_idx = 0;
    for (int o = 0; o < 3; ++o) {
      if (!bounds.available[o]) continue;
      HighCandidate cand;
      cand.option = o;
      cand.lateral = bounds.offset(o);
      cand.longitudinal = o == choice.option ? choice.action.longitudinal : choice.head_a[o];
      if (o == choice.option) chosen_idx = static_cast<int>(candidates.size());
      cand.q = critic_value_high(policies.high, s_h, o, cand.longitudinal);
      MotionGuidance g = build_guidance({cand.lateral, cand.longitudinal}, state.ego,
                                        cfg.road, cfg.guidance);
      cand.risk = risk_severity(g, state, cfg.apf);
      candidates.push_back(cand);
      cand_guidance.push_back(std::move(g));
    }

    // Pre-correction risk of the chosen action: the Eq-level trigger
    // quantity, also the K^h that enters rewards and termination.
    double k_high = candidates[chosen_idx].risk;
    HighCorrection corr{chosen_idx, false};
    if (opts.safety_on) corr = correct_high(candidates, chosen_idx, opts.eta, k_th);
    const HighCandidate exec = candidates[corr.index];
    MotionGuidance guidance = cand_guidance[corr.index];
    double k_low_cur = risk_severity(guidance, state, cfg.apf);

    SegmentInfo seg;
    seg.candidates = candidates;
    seg.chosen = chosen_idx;
    seg.corrected = corr.index;
    seg.corr_fired = corr.fired;

    std::vector<double> seg_rewards;
    Observation obs_cur = s_h;
    bool beta = false;

    for (int i = 1; !beta; ++i) {
      Eigen::VectorXd z = make_extend_state(obs_cur, guidance, cfg.road, cfg.guidance);
      Eigen::Vector2d a_policy = select_low(policies.low, z, ex);
      Eigen::Vector2d a_exec = a_policy;
      bool corr_low_fired = false;
      if (opts.safety_on && opts.eta * k_low_cur >= k_th) {
        Eigen::Vector2d a_prior = prior_control(state, guidance, cfg.prior);
        LowCorrection lc = correct_low(a_policy, a_prior, k_low_cur, opts.eta, k_th,
                                       [&](const Eigen::Vector2d& a) {
                                         return critic_value_low(policies.low, z, a);
                                       });
        a_exec = lc.action;
        corr_low_fired = lc.fired;
      }

      Pose old_pose = state.ego.pose();
      advance(state, a_exec[0], a_exec[1], cfg.dt);

      GuidanceUpdate upd = update_guidance(guidance, old_pose, state.ego.pose(), cfg.road);
      double k_low_next = 0.0;
      if (!upd.exhausted) {
        guidance = upd.guidance;
        k_low_next = risk_severity(guidance, state, cfg.apf);
      }

      bool f_v = state.violation;
      double r = low_reward(state, a_exec, prev_cmd, k_high, k_low_next, f_v, cfg.reward);
      seg_rewards.push_back(r);
      result.total_reward += r;
      ++result.steps;

      bool episode_over = f_v || state.sim_time >= cfg.horizon - 1e-9 ||
                          state.ego.x >= cfg.road.road_length;
      if (opts.safety_on) {
        beta = terminate(f_v, i, n_max, k_low_next, k_high, opts.eta, k_th);
      } else {
        beta = f_v || i == n_max;
      }
      // Exhausted guidance and episode end both close the segment.
      beta = beta || upd.exhausted || episode_over;

      Observation obs_next = observe(state);
      LowTransition lt;
      lt.z = std::move(z);
      lt.a = a_exec;
      lt.r = r;
      lt.z_next = make_extend_state(obs_next, upd.guidance, cfg.road, cfg.guidance);
      lt.beta = beta;
      lt.violation = f_v;
      lt.ego_next = state.ego;

      if (hooks.on_step) {
        StepInfo info;
        info.t = state.sim_time;
        info.segment = segment_index;
        info.index = i;
        info.state = &state;
        info.cmd = a_exec;
        info.cmd_policy = a_policy;
        info.option_exec = exec.option;
        info.a_h_exec = exec.longitudinal;
        info.updated_action = upd.exhausted ? HybridAction{} : upd.action;
        info.k_high = k_high;
        info.k_low = k_low_next;
        info.eta = opts.eta;
        info.corr_high_fired = seg.corr_fired;
        info.corr_low_fired = corr_low_fired;
        info.beta = beta;
        info.f_v = f_v;
        info.exhausted = upd.exhausted;
        info.r_low = r;
        info.ttc_current = compute_ttc(state, state.ego.lane_id, cfg.safety_cfg.ttc_cap);
        int target_lane = state.ego.lane_id;
        if (!upd.exhausted && !upd.guidance.empty()) {
          target_lane =
              cfg.road.lane_of(upd.guidance.anchor.y + upd.guidance.endpoint().y());
        }
        info.ttc_target = compute_ttc(state, target_lane, cfg.safety_cfg.ttc_cap);
        info.ego_lane = state.ego.lane_id;
        info.guidance = &upd.guidance;
        info.transition = &lt;
        hooks.on_step(info);
      }

      prev_cmd = a_exec;
      obs_cur = std::move(obs_next);
      k_low_cur = k_low_next;
      episode_done = episode_over;
      seg.n = i;
    }

    bool f_v_end = state.violation;
    seg.low_rewards = seg_rewards;
    seg.transition.s = s_h;
    seg.transition.option = exec.option;
    seg.transition.a_h = exec.longitudinal;
    seg.transition.r = high_reward(seg_rewards, f_v_end, cfg.reward.violation_reward);
    seg.transition.s_next = obs_cur;
    seg.transition.bounds = bounds;
    seg.transition.bounds_next = hybrid_bounds(state.ego, cfg.road, cfg.guidance);
    seg.transition.terminal = f_v_end;
    if (hooks.on_segment) hooks.on_segment(seg);
    ++segment_index;
  }

  result.segments = segment_index;
  result.violation = state.violation;
  result.violation_kind = state.violation_kind;
  return result;
}

TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  Policies* out_policies, const StepHooks* extra_hooks) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.log_path = out_dir + "/train_log.csv";
  result.checkpoint_path = out_dir + "/checkpoint_final.txt";

  Policies policies = make_policies(cfg, derive_seed(cfg.seed, kStreamInit));
  ReplayBuffer<LowTransition> low_buffer(cfg.low_capacity, derive_seed(cfg.seed, kStreamLowBuffer));
  ReplayBuffer<HighTransition> high_buffer(cfg.high_capacity,
                                           derive_seed(cfg.seed, kStreamHighBuffer));
  std::mt19937_64 explore_rng(derive_seed(cfg.seed, kStreamExplore));
  LowTargetCtx ctx{cfg.road, cfg.guidance};

  std::ofstream log(result.log_path);
  if (!log) throw std::runtime_error("train: cannot open " + result.log_path);
  log << "episode,total_reward,steps,collisions,mean_k,eta,eps\n";

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    double eta = eta_schedule(episode, cfg);
    double eps = epsilon_schedule(episode, cfg);
    double sigma = sigma_schedule(episode, cfg);

    SimState state = reset(cfg.road, cfg.traffic, derive_seed(cfg.seed, kStreamEnv + episode));

    double k_sum = 0.0;
    long k_count = 0;
    StepHooks hooks;
    hooks.on_step = [&](const StepInfo& info) {
      low_buffer.push(*info.transition);
      k_sum += info.k_low;
      ++k_count;
      if (low_buffer.size() >= static_cast<std::size_t>(cfg.low_warmup)) {
        if (auto batch = low_buffer.sample(cfg.batch)) {
          update_low(policies.low, *batch, policies.high, ctx);
        }
      }
      if (extra_hooks != nullptr && extra_hooks->on_step) extra_hooks->on_step(info);
    };
    hooks.on_segment = [&](const SegmentInfo& seg) {
      high_buffer.push(seg.transition);
      if (high_buffer.size() >= static_cast<std::size_t>(cfg.high_warmup)) {
        if (auto batch = high_buffer.sample(cfg.batch)) {
          update_high(policies.high, *batch);
        }
      }
      if (extra_hooks != nullptr && extra_hooks->on_segment) extra_hooks->on_segment(seg);
    };

    RunOptions opts;
    opts.explore = true;
    opts.epsilon = eps;
    opts.sigma = sigma;
    opts.eta = eta;
    opts.safety_on = cfg.safety;

    EpisodeResult er;
    try {
      er = run_episode(state, policies, cfg, opts, &explore_rng, hooks);
    } catch (const std::runtime_error& e) {
      // Divergence guard tripped: keep the last cadence checkpoint on disk.
      result.aborted = true;
      result.abort_reason = e.what();
      log << "# aborted at episode " << episode << ": " << e.what() << "\n";
      return result;
    }

    EpisodeLog el;
    el.episode = episode;
    el.total_reward = er.total_reward;
    el.steps = er.steps;
    el.collisions = er.violation_kind == ViolationKind::collision ? 1 : 0;
    el.mean_k = k_count > 0 ? k_sum / k_count : 0.0;
    el.eta = eta;
    el.epsilon = eps;
    result.log.push_back(el);

    log << el.episode << "," << format_double(el.total_reward) << "," << el.steps << ","
        << el.collisions << "," << format_double(el.mean_k) << "," << format_double(el.eta)
        << "," << format_double(el.epsilon) << "\n";

    if (cfg.checkpoint_every > 0 && (episode + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoint_ep%05d.txt", episode + 1);
      save_policies(out_dir + name, policies);
    }
  }

  save_policies(result.checkpoint_path, policies);
  if (out_policies != nullptr) *out_policies = policies;
  return result;
}

}  // namespace hhrl
