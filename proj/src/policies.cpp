#include "hhrl/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hhrl/rng.hpp"

namespace hhrl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

Eigen::VectorXd high_critic_input(int obs_dim, const Observation& s, int option,
                                  double a_h, double a_scale) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(obs_dim + 4);
  x.head(obs_dim) = s;
  x[obs_dim + option] = 1.0;
  x[obs_dim + 3] = a_h / a_scale;
  return x;
}

}  // namespace

HighPolicy make_high_policy(int obs_dim, const std::vector<int>& hidden,
                            double lr_actor, double lr_critic, double gamma,
                            double tau, double a_scale, std::mt19937_64& rng) {
  HighPolicy p;
  p.obs_dim = obs_dim;
  p.gamma = gamma;
  p.tau = tau;
  p.a_scale = a_scale;
  std::vector<int> actor_sizes{obs_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(3);
  std::vector<int> critic_sizes{obs_dim + 4};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);
  p.actor = make_mlp(actor_sizes, rng);
  p.critic = make_mlp(critic_sizes, rng);
  p.actor_target = p.actor;
  p.critic_target = p.critic;
  p.actor_opt = make_adam(p.actor, lr_actor);
  p.critic_opt = make_adam(p.critic, lr_critic);
  return p;
}

LowPolicy make_low_policy(int z_dim, const std::vector<int>& hidden,
                          double lr_actor, double lr_critic, double gamma,
                          double tau, std::mt19937_64& rng) {
  LowPolicy p;
  p.z_dim = z_dim;
  p.gamma = gamma;
  p.tau = tau;
  std::vector<int> actor_sizes{z_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(2);
  std::vector<int> critic_sizes{z_dim + 2};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);
  p.actor = make_mlp(actor_sizes, rng);
  p.critic = make_mlp(critic_sizes, rng);
  p.actor_target = p.actor;
  p.critic_target = p.critic;
  p.actor_opt = make_adam(p.actor, lr_actor);
  p.critic_opt = make_adam(p.critic, lr_critic);
  return p;
}

double critic_value_high(const HighPolicy& p, const Observation& s, int option,
                         double a_h, bool use_target) {
  Eigen::VectorXd x = high_critic_input(p.obs_dim, s, option, a_h, p.a_scale);
  return forward(use_target ? p.critic_target : p.critic, x)[0];
}

double critic_value_low(const LowPolicy& p, const Eigen::VectorXd& z,
                        const Eigen::Vector2d& a, bool use_target) {
  Eigen::VectorXd x(p.z_dim + 2);
  x.head(p.z_dim) = z;
  x[p.z_dim] = a[0] / kMaxSteer;
  x[p.z_dim + 1] = a[1] / kMaxAccel;
  return forward(use_target ? p.critic_target : p.critic, x)[0];
}

HighChoice select_high(const HighPolicy& p, const Observation& s,
                       const HybridActionSpace& bounds, const Exploration& ex) {
  Eigen::VectorXd u = forward(p.actor, s);
  HighChoice choice;
  double best = kNegInf;
  for (int o = 0; o < 3; ++o) {
    choice.head_a[o] = squash(u[o], bounds.a_min, bounds.a_max);
    if (!bounds.available[o]) {
      choice.q[o] = kNegInf;  // masked out of the argmax
      continue;
    }
    choice.q[o] = critic_value_high(p, s, o, choice.head_a[o]);
    if (choice.q[o] > best) {
      best = choice.q[o];
      choice.option = o;
    }
  }

  double a_h = choice.head_a[choice.option];
  if (ex.enabled && ex.rng != nullptr) {
    if (uniform01(*ex.rng) < ex.epsilon) {
      int avail[3];
      int n = 0;
      for (int o = 0; o < 3; ++o) {
        if (bounds.available[o]) avail[n++] = o;
      }
      choice.option = avail[uniform_int(*ex.rng, n)];
      a_h = choice.head_a[choice.option];
    }
    a_h += ex.sigma * 0.5 * (bounds.a_max - bounds.a_min) * gaussian(*ex.rng);
    a_h = clamp(a_h, bounds.a_min, bounds.a_max);
  }
  choice.action = {bounds.offset(choice.option), a_h};
  return choice;
}

double high_critic_target(double r, const Observation& s_next, const HighPolicy& p,
                          const HybridActionSpace& bounds_next, bool terminal) {
  if (terminal) return r;
  Eigen::VectorXd u = forward(p.actor_target, s_next);
  double best = kNegInf;
  for (int o = 0; o < 3; ++o) {
    if (!bounds_next.available[o]) continue;
    double a_h = squash(u[o], bounds_next.a_min, bounds_next.a_max);
    best = std::max(best, critic_value_high(p, s_next, o, a_h, true));
  }
  return r + p.gamma * best;
}

UpdateInfo update_high(HighPolicy& p, const std::vector<HighTransition>& batch) {
  const int b_size = static_cast<int>(batch.size());
  if (b_size == 0) throw std::invalid_argument("update_high: empty batch");
  const int obs = p.obs_dim;

  Eigen::MatrixXd s(obs, b_size), s_next(obs, b_size);
  for (int b = 0; b < b_size; ++b) {
    s.col(b) = batch[b].s;
    s_next.col(b) = batch[b].s_next;
  }

  // Targets: max over available options of the target critic evaluated at
  // the target actor's heads.
  Eigen::MatrixXd u_next = forward_batch(p.actor_target, s_next);
  Eigen::VectorXd best = Eigen::VectorXd::Constant(b_size, kNegInf);
  Eigen::MatrixXd x(obs + 4, b_size);
  for (int o = 0; o < 3; ++o) {
    x.topRows(obs) = s_next;
    x.middleRows(obs, 3).setZero();
    x.row(obs + o).setOnes();
    for (int b = 0; b < b_size; ++b) {
      const auto& bd = batch[b].bounds_next;
      x(obs + 3, b) = squash(u_next(o, b), bd.a_min, bd.a_max) / p.a_scale;
    }
    Eigen::MatrixXd q = forward_batch(p.critic_target, x);
    for (int b = 0; b < b_size; ++b) {
      if (batch[b].bounds_next.available[o]) best[b] = std::max(best[b], q(0, b));
    }
  }
  Eigen::VectorXd y(b_size);
  for (int b = 0; b < b_size; ++b) {
    y[b] = batch[b].terminal ? batch[b].r : batch[b].r + p.gamma * best[b];
  }

  // Critic: squared TD error against y.
  Eigen::MatrixXd xc = Eigen::MatrixXd::Zero(obs + 4, b_size);
  xc.topRows(obs) = s;
  for (int b = 0; b < b_size; ++b) {
    xc(obs + batch[b].option, b) = 1.0;
    xc(obs + 3, b) = batch[b].a_h / p.a_scale;
  }
  ForwardTrace ctrace = forward_trace(p.critic, xc);
  Eigen::RowVectorXd diff = ctrace.output().row(0) - y.transpose();
  double critic_loss = 0.5 * diff.squaredNorm() / b_size;
  Gradients cgrads = backward_trace(p.critic, ctrace, diff / b_size);
  adam_step(p.critic, cgrads, p.critic_opt);

  // Actor: ascend sum over available options of Q^h(s, o, mu^h(s)_o),
  // chaining through the squash and the critic's a^h input slot.
  ForwardTrace atrace = forward_trace(p.actor, s);
  const Eigen::MatrixXd& u = atrace.output();
  Eigen::MatrixXd g_u = Eigen::MatrixXd::Zero(3, b_size);
  double actor_value = 0.0;
  for (int o = 0; o < 3; ++o) {
    x.topRows(obs) = s;
    x.middleRows(obs, 3).setZero();
    x.row(obs + o).setOnes();
    Eigen::VectorXd dadu(b_size);
    for (int b = 0; b < b_size; ++b) {
      const auto& bd = batch[b].bounds;
      x(obs + 3, b) = squash(u(o, b), bd.a_min, bd.a_max) / p.a_scale;
      dadu[b] = squash_grad(u(o, b), bd.a_min, bd.a_max);
    }
    ForwardTrace qtrace = forward_trace(p.critic, x);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(1, b_size);
    for (int b = 0; b < b_size; ++b) {
      if (!batch[b].bounds.available[o]) continue;
      upstream(0, b) = 1.0 / b_size;
      actor_value += qtrace.output()(0, b) / b_size;
    }
    Gradients qgrads = backward_trace(p.critic, qtrace, upstream);
    for (int b = 0; b < b_size; ++b) {
      g_u(o, b) = qgrads.input(obs + 3, b) / p.a_scale * dadu[b];
    }
  }
  Gradients agrads = backward_trace(p.actor, atrace, -g_u);
  adam_step(p.actor, agrads, p.actor_opt);

  soft_update(p.actor_target, p.actor, p.tau);
  soft_update(p.critic_target, p.critic, p.tau);
  return {critic_loss, actor_value};
}

Eigen::VectorXd make_extend_state(const Observation& obs, const MotionGuidance& g,
                                  const RoadConfig& road, const GuidanceConfig& cfg) {
  Eigen::VectorXd z(kObsDim + 2 * cfg.num_points);
  z.head(kObsDim) = obs;
  int available = static_cast<int>(g.points.size());
  for (int j = 0; j < cfg.num_points; ++j) {
    double px = 0.0, py = 0.0;
    if (available > 0) {
      const Eigen::Vector2d& pt = g.points[std::min(j, available - 1)];
      px = pt.x();
      py = pt.y();
    }
    z[kObsDim + 2 * j] = clamp(px / cfg.x_cap, -1.0, 1.0);
    z[kObsDim + 2 * j + 1] = clamp(py / road.width(), -1.0, 1.0);
  }
  return z;
}

Eigen::Vector2d select_low(const LowPolicy& p, const Eigen::VectorXd& z,
                           const Exploration& ex) {
  Eigen::VectorXd u = forward(p.actor, z);
  Eigen::Vector2d a(kMaxSteer * std::tanh(u[0]), kMaxAccel * std::tanh(u[1]));
  if (ex.enabled && ex.rng != nullptr) {
    a[0] = clamp(a[0] + ex.sigma * kMaxSteer * gaussian(*ex.rng), -kMaxSteer, kMaxSteer);
    a[1] = clamp(a[1] + ex.sigma * kMaxAccel * gaussian(*ex.rng), -kMaxAccel, kMaxAccel);
  }
  return a;
}

namespace {

Eigen::Vector2d low_target_action(const LowPolicy& p, const Eigen::VectorXd& z) {
  Eigen::VectorXd u = forward(p.actor_target, z);
  return {kMaxSteer * std::tanh(u[0]), kMaxAccel * std::tanh(u[1])};
}

// Greedy guidance-action of the high-level target policy at obs/ego.
HybridAction target_high_action(const HighPolicy& high, const Observation& obs,
                                const VehicleState& ego, const LowTargetCtx& ctx) {
  HybridActionSpace bounds = hybrid_bounds(ego, ctx.road, ctx.guidance);
  Eigen::VectorXd u = forward(high.actor_target, obs);
  int best_o = 1;
  double best_q = kNegInf;
  double best_a = squash(u[1], bounds.a_min, bounds.a_max);
  for (int o = 0; o < 3; ++o) {
    if (!bounds.available[o]) continue;
    double a_h = squash(u[o], bounds.a_min, bounds.a_max);
    double q = critic_value_high(high, obs, o, a_h, true);
    if (q > best_q) {
      best_q = q;
      best_o = o;
      best_a = a_h;
    }
  }
  return {bounds.offset(best_o), best_a};
}

}  // namespace

double low_target(const LowTransition& t, const LowPolicy& low,
                  const HighPolicy& high, const LowTargetCtx& ctx) {
  if (t.violation) return t.r;
  Eigen::VectorXd z_boot;
  if (!t.beta) {
    z_boot = t.z_next;
  } else {
    // Segment boundary: the next extend-state comes from guidance freshly
    // built by the high-level target policy at s'.
    Observation obs = t.z_next.head(kObsDim);
    HybridAction action = target_high_action(high, obs, t.ego_next, ctx);
    MotionGuidance g = build_guidance(action, t.ego_next, ctx.road, ctx.guidance);
    z_boot = make_extend_state(obs, g, ctx.road, ctx.guidance);
  }
  Eigen::Vector2d a_next = low_target_action(low, z_boot);
  return t.r + low.gamma * critic_value_low(low, z_boot, a_next, true);
}

UpdateInfo update_low(LowPolicy& low, const std::vector<LowTransition>& batch,
                      const HighPolicy& high, const LowTargetCtx& ctx) {
  const int b_size = static_cast<int>(batch.size());
  if (b_size == 0) throw std::invalid_argument("update_low: empty batch");
  const int zd = low.z_dim;

  // Targets: in-segment bootstraps run batched; segment boundaries and
  // terminals go through low_target one by one.
  Eigen::VectorXd y(b_size);
  std::vector<int> plain;
  plain.reserve(batch.size());
  for (int b = 0; b < b_size; ++b) {
    if (batch[b].violation || batch[b].beta) {
      y[b] = low_target(batch[b], low, high, ctx);
    } else {
      plain.push_back(b);
    }
  }
  if (!plain.empty()) {
    const int n = static_cast<int>(plain.size());
    Eigen::MatrixXd z_next(zd, n);
    for (int i = 0; i < n; ++i) z_next.col(i) = batch[plain[i]].z_next;
    Eigen::MatrixXd u = forward_batch(low.actor_target, z_next);
    Eigen::MatrixXd x(zd + 2, n);
    x.topRows(zd) = z_next;
    x.row(zd) = u.row(0).array().tanh();      // squashed action / bound
    x.row(zd + 1) = u.row(1).array().tanh();
    Eigen::MatrixXd q = forward_batch(low.critic_target, x);
    for (int i = 0; i < n; ++i) {
      y[plain[i]] = batch[plain[i]].r + low.gamma * q(0, i);
    }
  }

  // Critic.
  Eigen::MatrixXd xc(zd + 2, b_size);
  for (int b = 0; b < b_size; ++b) {
    xc.col(b).head(zd) = batch[b].z;
    xc(zd, b) = batch[b].a[0] / kMaxSteer;
    xc(zd + 1, b) = batch[b].a[1] / kMaxAccel;
  }
  ForwardTrace ctrace = forward_trace(low.critic, xc);
  Eigen::RowVectorXd diff = ctrace.output().row(0) - y.transpose();
  double critic_loss = 0.5 * diff.squaredNorm() / b_size;
  Gradients cgrads = backward_trace(low.critic, ctrace, diff / b_size);
  adam_step(low.critic, cgrads, low.critic_opt);

  // Actor: ascend Q^l(z, mu^l(z)).
  Eigen::MatrixXd z(zd, b_size);
  for (int b = 0; b < b_size; ++b) z.col(b) = batch[b].z;
  ForwardTrace atrace = forward_trace(low.actor, z);
  const Eigen::MatrixXd& u = atrace.output();
  Eigen::MatrixXd xa(zd + 2, b_size);
  xa.topRows(zd) = z;
  xa.row(zd) = u.row(0).array().tanh();
  xa.row(zd + 1) = u.row(1).array().tanh();
  ForwardTrace qtrace = forward_trace(low.critic, xa);
  double actor_value = qtrace.output().row(0).mean();
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, b_size, 1.0 / b_size);
  Gradients qgrads = backward_trace(low.critic, qtrace, upstream);
  Eigen::MatrixXd g_u(2, b_size);
  g_u.row(0) = qgrads.input.row(zd).array() * (1.0 - xa.row(zd).array().square());
  g_u.row(1) = qgrads.input.row(zd + 1).array() * (1.0 - xa.row(zd + 1).array().square());
  Gradients agrads = backward_trace(low.actor, atrace, -g_u);
  adam_step(low.actor, agrads, low.actor_opt);

  soft_update(low.actor_target, low.actor, low.tau);
  soft_update(low.critic_target, low.critic, low.tau);
  return {critic_loss, actor_value};
}

}  // namespace hhrl
