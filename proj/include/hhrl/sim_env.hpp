#pragma once

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "hhrl/types.hpp"

namespace hhrl {

enum class ViolationKind { none, collision, road_departure };

// Full world state. Value object: copying it forks the simulation,
// including the RNG stream, so trajectories are bit-reproducible.
struct SimState {
  RoadConfig road;
  TrafficConfig traffic;
  VehicleState ego;
  std::vector<VehicleState> svs;
  double sim_time = 0.0;
  long step_count = 0;
  std::mt19937_64 rng{0};
  bool violation = false;  // f_v, latched for the episode
  ViolationKind violation_kind = ViolationKind::none;
  long clamp_events = 0;   // commands outside A^l, clamped and counted
};

SimState reset(const RoadConfig& road, const TrafficConfig& traffic, std::uint64_t seed);

// Advances ego (kinematic bicycle, substepped forward Euler) and every SV
// (IDM longitudinal + MOBIL lane changes) by dt, then refreshes the
// violation flag. The functional form copies; advance() mutates in place.
void advance(SimState& state, double steer, double accel, double dt);
SimState step(SimState state, double steer, double accel, double dt);

// Standard IDM acceleration of `follower` toward its target_speed, clamped
// to [-road.max_brake, +idm.accel_max]. Pass nullptr for a free road.
double idm_accel(const VehicleState& follower, const VehicleState* leader,
                 const IdmParams& idm, const RoadConfig& road);

enum class LaneSide { left, right };

bool mobil_should_change(const SimState& state, int sv_index, LaneSide direction);

// Nearest vehicle ahead of / behind `x` in `lane`, among ego and SVs,
// excluding `skip_sv` (pass -2 to exclude the ego, -1 to exclude nothing).
const VehicleState* lane_leader(const SimState& state, int lane, double x, int skip_sv);
const VehicleState* lane_follower(const SimState& state, int lane, double x, int skip_sv);

// Indices into state.svs for the six observed slots:
// {front,rear} x {current, left, right} lane. -1 marks an empty slot.
std::array<int, kSvSlots> observed_sv_slots(const SimState& state);

Observation observe(const SimState& state);

bool check_violation(const SimState& state);
ViolationKind classify_violation(const SimState& state);

// Oriented-rectangle overlap via separating axes; touching counts.
bool rectangles_intersect(const Pose& a, double len_a, double wid_a,
                          const Pose& b, double len_b, double wid_b);

double compute_ttc(const SimState& state, int lane, double ttc_cap);

}  // namespace hhrl
