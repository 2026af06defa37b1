#include "hhrl/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hhrl/rng.hpp"

namespace hhrl {

namespace {

// Internal Euler substeps per control step. 2000 keeps the worst case
// (full steer at top speed) within ~4e-4 m of a dt=1e-4 reference over one
// 0.1 s step; a single Euler step would be off by centimeters.
constexpr int kEgoSubsteps = 2000;
constexpr double kHeadingClamp = 1.55;  // keeps |phi| < pi/2

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// Quantized lane membership from the lateral position.
void refresh_lane(VehicleState& v, const RoadConfig& road) { v.lane_id = road.lane_of(v.y); }

bool overlaps_longitudinally(const VehicleState& a, const VehicleState& b) {
  return std::abs(a.x - b.x) < 0.5 * (a.length + b.length) + 1.0;
}

bool spot_free(const SimState& state, int lane, double x, double margin) {
  auto near = [&](const VehicleState& v) {
    return v.lane_id == lane && std::abs(v.x - x) < margin;
  };
  if (near(state.ego)) return false;
  for (const auto& sv : state.svs) {
    if (near(sv)) return false;
  }
  return true;
}

}  // namespace

SimState reset(const RoadConfig& road, const TrafficConfig& traffic, std::uint64_t seed) {
  road.validate();
  traffic.validate();

  SimState state;
  state.road = road;
  state.traffic = traffic;
  state.rng.seed(seed);

  state.ego.length = road.vehicle_length;
  state.ego.width = road.vehicle_width;
  state.ego.x = 50.0;
  state.ego.lane_id = uniform_int(state.rng, road.lane_count);
  state.ego.y = road.lane_center(state.ego.lane_id);
  state.ego.v_x = uniform(state.rng, 10.0, 20.0);

  int slots = static_cast<int>(road.road_length / traffic.slot_length);
  for (int lane = 0; lane < road.lane_count; ++lane) {
    for (int s = 0; s < slots; ++s) {
      double center = (s + 0.5) * traffic.slot_length;
      bool excluded = lane == state.ego.lane_id &&
                      std::abs(center - state.ego.x) < traffic.ego_exclusion;
      double draw = uniform01(state.rng);  // drawn for every slot: fixed stream layout
      if (excluded || draw >= traffic.density) continue;
      VehicleState sv;
      sv.length = road.vehicle_length;
      sv.width = road.vehicle_width;
      sv.lane_id = lane;
      sv.y = road.lane_center(lane);
      double jitter = std::min(traffic.spawn_jitter,
                               0.5 * traffic.slot_length - 0.5 * sv.length - 1.0);
      sv.x = center + uniform(state.rng, -jitter, jitter);
      sv.target_speed = uniform(state.rng, traffic.sv_speed_min, traffic.sv_speed_max);
      sv.v_x = uniform(state.rng, 10.0, sv.target_speed);
      state.svs.push_back(sv);
    }
  }
  return state;
}

double idm_accel(const VehicleState& follower, const VehicleState* leader,
                 const IdmParams& idm, const RoadConfig& road) {
  double v = follower.v_x;
  double v0 = std::max(0.1, follower.target_speed);
  double accel = idm.accel_max * (1.0 - std::pow(v / v0, idm.exponent));
  if (leader != nullptr) {
    double gap = leader->x - follower.x - 0.5 * (leader->length + follower.length);
    if (gap <= 0.1) return -road.max_brake;
    double dv = v - leader->v_x;
    double s_star = idm.min_gap +
                    std::max(0.0, v * idm.headway +
                                      v * dv / (2.0 * std::sqrt(idm.accel_max * idm.brake_comfort)));
    accel -= idm.accel_max * (s_star / gap) * (s_star / gap);
  }
  return clamp(accel, -road.max_brake, idm.accel_max);
}

const VehicleState* lane_leader(const SimState& state, int lane, double x, int skip_sv) {
  const VehicleState* best = nullptr;
  auto consider = [&](const VehicleState& v) {
    if (v.lane_id != lane || v.x <= x) return;
    if (best == nullptr || v.x < best->x) best = &v;
  };
  if (skip_sv != -2) consider(state.ego);
  for (int i = 0; i < static_cast<int>(state.svs.size()); ++i) {
    if (i == skip_sv) continue;
    consider(state.svs[i]);
  }
  return best;
}

const VehicleState* lane_follower(const SimState& state, int lane, double x, int skip_sv) {
  const VehicleState* best = nullptr;
  auto consider = [&](const VehicleState& v) {
    if (v.lane_id != lane || v.x >= x) return;
    if (best == nullptr || v.x > best->x) best = &v;
  };
  if (skip_sv != -2) consider(state.ego);
  for (int i = 0; i < static_cast<int>(state.svs.size()); ++i) {
    if (i == skip_sv) continue;
    consider(state.svs[i]);
  }
  return best;
}

bool mobil_should_change(const SimState& state, int sv_index, LaneSide direction) {
  const RoadConfig& road = state.road;
  const MobilParams& mobil = state.traffic.mobil;
  const IdmParams& idm = state.traffic.idm;
  const VehicleState& sv = state.svs[sv_index];

  int target = sv.lane_id + (direction == LaneSide::left ? 1 : -1);
  if (target < 0 || target >= road.lane_count) return false;

  const VehicleState* lead_cur = lane_leader(state, sv.lane_id, sv.x, sv_index);
  const VehicleState* fol_cur = lane_follower(state, sv.lane_id, sv.x, sv_index);
  const VehicleState* lead_tgt = lane_leader(state, target, sv.x, sv_index);
  const VehicleState* fol_tgt = lane_follower(state, target, sv.x, sv_index);

  // No physical room in the target lane.
  if ((lead_tgt && overlaps_longitudinally(sv, *lead_tgt)) ||
      (fol_tgt && overlaps_longitudinally(sv, *fol_tgt))) {
    return false;
  }

  // Safety criterion: the new follower must not brake beyond the limit.
  if (fol_tgt != nullptr && idm_accel(*fol_tgt, &sv, idm, road) < -mobil.safe_brake) {
    return false;
  }

  double a_self_old = idm_accel(sv, lead_cur, idm, road);
  VehicleState ghost = sv;
  ghost.lane_id = target;
  double a_self_new = idm_accel(ghost, lead_tgt, idm, road);

  double follower_terms = 0.0;
  if (fol_tgt != nullptr) {
    follower_terms += idm_accel(*fol_tgt, &sv, idm, road) - idm_accel(*fol_tgt, lead_tgt, idm, road);
  }
  if (fol_cur != nullptr) {
    follower_terms += idm_accel(*fol_cur, lead_cur, idm, road) - idm_accel(*fol_cur, &sv, idm, road);
  }
  double incentive = a_self_new - a_self_old + mobil.politeness * follower_terms;
  return incentive > mobil.threshold;
}

namespace {

void advance_ego(SimState& state, double steer, double accel, double dt) {
  const RoadConfig& road = state.road;
  VehicleState& ego = state.ego;
  double v = ego.speed();
  double x = ego.x, y = ego.y, phi = ego.heading;
  double h = dt / kEgoSubsteps;
  double curvature_gain = std::tan(steer) / road.wheelbase;
  for (int k = 0; k < kEgoSubsteps; ++k) {
    x += v * std::cos(phi) * h;
    y += v * std::sin(phi) * h;
    phi += v * curvature_gain * h;
    phi = clamp(phi, -kHeadingClamp, kHeadingClamp);
    v = clamp(v + accel * h, 0.0, road.max_speed);
  }
  double vx_old = ego.v_x, vy_old = ego.v_y;
  ego.x = x;
  ego.y = y;
  ego.heading = phi;
  ego.v_x = v * std::cos(phi);
  ego.v_y = v * std::sin(phi);
  ego.accel = accel;
  ego.accel_x = (ego.v_x - vx_old) / dt;
  ego.accel_y = (ego.v_y - vy_old) / dt;
  refresh_lane(ego, road);
}

void advance_svs(SimState& state, double dt) {
  const RoadConfig& road = state.road;
  const TrafficConfig& traffic = state.traffic;
  int period_steps = std::max(1L, std::lround(traffic.mobil.check_period / dt));

  for (int i = 0; i < static_cast<int>(state.svs.size()); ++i) {
    VehicleState& sv = state.svs[i];
    double vx_old = sv.v_x, vy_old = sv.v_y;

    if (!sv.lc.active &&
        (state.step_count + i) % period_steps == 0) {  // staggered decision cadence
      LaneSide side = LaneSide::left;
      bool go = mobil_should_change(state, i, LaneSide::left);
      if (!go && mobil_should_change(state, i, LaneSide::right)) {
        go = true;
        side = LaneSide::right;
      }
      if (go) {
        sv.lc.active = true;
        sv.lc.t = 0.0;
        sv.lc.duration = traffic.mobil.change_duration;
        sv.lc.y_from = sv.y;
        int target = sv.lane_id + (side == LaneSide::left ? 1 : -1);
        sv.lc.y_to = road.lane_center(target);
      }
    }

    const VehicleState* leader = lane_leader(state, sv.lane_id, sv.x, i);
    double accel = idm_accel(sv, leader, traffic.idm, road);
    sv.x += sv.v_x * dt;
    sv.v_x = std::max(0.0, sv.v_x + accel * dt);
    sv.accel = accel;

    if (sv.lc.active) {
      sv.lc.t += dt;
      double tau = std::min(1.0, sv.lc.t / sv.lc.duration);
      double span = sv.lc.y_to - sv.lc.y_from;
      sv.y = sv.lc.y_from + span * 0.5 * (1.0 - std::cos(kPi * tau));
      sv.v_y = span * 0.5 * kPi / sv.lc.duration * std::sin(kPi * tau);
      if (tau >= 1.0) {
        sv.y = sv.lc.y_to;
        sv.v_y = 0.0;
        sv.lc.active = false;
      }
    } else {
      sv.v_y = 0.0;
    }
    sv.heading = std::atan2(sv.v_y, std::max(0.1, sv.v_x));
    sv.accel_x = (sv.v_x - vx_old) / dt;
    sv.accel_y = (sv.v_y - vy_old) / dt;
    refresh_lane(sv, road);
  }
}

// Wraparound spawning: traffic that falls far behind the ego re-enters
// ahead of it, outside the observation range.
void respawn_dropped_svs(SimState& state) {
  const RoadConfig& road = state.road;
  const TrafficConfig& traffic = state.traffic;
  for (auto& sv : state.svs) {
    if (sv.x >= state.ego.x - 120.0 || sv.lc.active) continue;
    int lane = uniform_int(state.rng, road.lane_count);
    double x = state.ego.x + uniform(state.rng, kObsAhead + 10.0, kObsAhead + 100.0);
    if (!spot_free(state, lane, x, traffic.slot_length * 0.5)) continue;  // retry next step
    sv.lane_id = lane;
    sv.x = x;
    sv.y = road.lane_center(lane);
    sv.heading = 0.0;
    sv.target_speed = uniform(state.rng, traffic.sv_speed_min, traffic.sv_speed_max);
    sv.v_x = uniform(state.rng, 10.0, sv.target_speed);
    sv.v_y = 0.0;
    sv.accel = sv.accel_x = sv.accel_y = 0.0;
  }
}

}  // namespace

void advance(SimState& state, double steer, double accel, double dt) {
  double s = clamp(steer, -kMaxSteer, kMaxSteer);
  double a = clamp(accel, -kMaxAccel, kMaxAccel);
  if (s != steer || a != accel) ++state.clamp_events;

  advance_svs(state, dt);
  advance_ego(state, s, a, dt);
  respawn_dropped_svs(state);

  if (!state.violation) {
    ViolationKind kind = classify_violation(state);
    if (kind != ViolationKind::none) {
      state.violation = true;  // latched
      state.violation_kind = kind;
    }
  }
  state.sim_time += dt;
  ++state.step_count;
}

SimState step(SimState state, double steer, double accel, double dt) {
  advance(state, steer, accel, dt);
  return state;
}

std::array<int, kSvSlots> observed_sv_slots(const SimState& state) {
  std::array<int, kSvSlots> slots;
  slots.fill(-1);
  const int lanes[3] = {state.ego.lane_id, state.ego.lane_id + 1, state.ego.lane_id - 1};
  for (int li = 0; li < 3; ++li) {
    int lane = lanes[li];
    if (lane < 0 || lane >= state.road.lane_count) continue;
    double best_front = std::numeric_limits<double>::infinity();
    double best_rear = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(state.svs.size()); ++i) {
      const VehicleState& sv = state.svs[i];
      if (sv.lane_id != lane) continue;
      double dx = sv.x - state.ego.x;
      if (dx < -kObsBehind || dx > kObsAhead) continue;
      if (dx >= 0.0 && dx < best_front) {
        best_front = dx;
        slots[2 * li] = i;
      } else if (dx < 0.0 && dx > best_rear) {
        best_rear = dx;
        slots[2 * li + 1] = i;
      }
    }
  }
  return slots;
}

Observation observe(const SimState& state) {
  const RoadConfig& road = state.road;
  const VehicleState& ego = state.ego;
  Observation obs = Observation::Zero(kObsDim);

  obs[0] = static_cast<double>(ego.lane_id) / std::max(1, road.lane_count - 1);
  obs[1] = ego.x / road.road_length;
  obs[2] = ego.y / road.width();
  obs[3] = ego.heading / kHeadingNorm;
  obs[4] = ego.v_x / kSpeedNorm;
  obs[5] = ego.v_y / kSpeedNorm;

  auto slots = observed_sv_slots(state);
  for (int k = 0; k < kSvSlots; ++k) {
    if (slots[k] < 0) continue;
    const VehicleState& sv = state.svs[slots[k]];
    int base = kEgoBlock + k * kSvBlock;
    obs[base + 0] = 1.0;
    obs[base + 1] = (sv.x - ego.x) / kObsAhead;
    obs[base + 2] = (sv.y - ego.y) / road.width();
    obs[base + 3] = (sv.heading - ego.heading) / kHeadingNorm;
    obs[base + 4] = (sv.v_x - ego.v_x) / kSpeedNorm;
    obs[base + 5] = (sv.v_y - ego.v_y) / kSpeedNorm;
  }
  for (int i = 0; i < kObsDim; ++i) obs[i] = clamp(obs[i], -1.0, 1.0);
  return obs;
}

bool rectangles_intersect(const Pose& a, double len_a, double wid_a,
                          const Pose& b, double len_b, double wid_b) {
  auto corners = [](const Pose& p, double len, double wid) {
    std::array<Eigen::Vector2d, 4> c;
    double cx = std::cos(p.heading), sy = std::sin(p.heading);
    Eigen::Vector2d ax(cx, sy), ay(-sy, cx);
    Eigen::Vector2d center(p.x, p.y);
    c[0] = center + 0.5 * len * ax + 0.5 * wid * ay;
    c[1] = center + 0.5 * len * ax - 0.5 * wid * ay;
    c[2] = center - 0.5 * len * ax - 0.5 * wid * ay;
    c[3] = center - 0.5 * len * ax + 0.5 * wid * ay;
    return c;
  };
  auto ca = corners(a, len_a, wid_a);
  auto cb = corners(b, len_b, wid_b);

  auto separated_on = [&](const Eigen::Vector2d& axis) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const auto& p : ca) {
      double d = axis.dot(p);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (const auto& p : cb) {
      double d = axis.dot(p);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    return amax < bmin || bmax < amin;  // touching is not separation
  };

  const Eigen::Vector2d axes[4] = {
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const auto& axis : axes) {
    if (separated_on(axis)) return false;
  }
  return true;
}

bool check_violation(const SimState& state) {
  return classify_violation(state) != ViolationKind::none;
}

ViolationKind classify_violation(const SimState& state) {
  const VehicleState& ego = state.ego;
  if (ego.y < 0.0 || ego.y > state.road.width()) return ViolationKind::road_departure;
  for (const auto& sv : state.svs) {
    if (std::abs(sv.x - ego.x) > ego.length + sv.length) continue;  // cheap reject
    if (rectangles_intersect(ego.pose(), ego.length, ego.width, sv.pose(), sv.length,
                             sv.width)) {
      return ViolationKind::collision;
    }
  }
  return ViolationKind::none;
}

double compute_ttc(const SimState& state, int lane, double ttc_cap) {
  const VehicleState* leader = nullptr;
  for (const auto& sv : state.svs) {
    if (sv.lane_id != lane || sv.x <= state.ego.x) continue;
    if (leader == nullptr || sv.x < leader->x) leader = &sv;
  }
  if (leader == nullptr) return ttc_cap;
  double gap = leader->x - state.ego.x - 0.5 * (leader->length + state.ego.length);
  if (gap <= 0.0) return 0.0;
  double closing = state.ego.v_x - leader->v_x;
  if (closing <= 0.0) return ttc_cap;
  return std::min(ttc_cap, gap / closing);
}

}  // namespace hhrl
