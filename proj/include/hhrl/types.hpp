#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace hhrl {

inline constexpr double kPi = 3.14159265358979323846;

// Observation geometry and normalization scales, shared by the simulator,
// the extend-state builder and the risk model.
inline constexpr double kObsBehind = 80.0;    // visible range behind ego [m]
inline constexpr double kObsAhead = 160.0;    // visible range ahead of ego [m]
inline constexpr double kSpeedNorm = 30.0;    // speed normalization [m/s]
inline constexpr double kHeadingNorm = kPi / 2.0;

inline constexpr int kEgoBlock = 6;
inline constexpr int kSvSlots = 6;
inline constexpr int kSvBlock = 6;
inline constexpr int kObsDim = kEgoBlock + kSvSlots * kSvBlock;  // 42

// A^l bounds (steer [rad], accel [m/s^2]).
inline constexpr double kMaxSteer = kPi / 6.0;
inline constexpr double kMaxAccel = 3.0;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct RoadConfig {
  int lane_count = 3;
  double lane_width = 4.0;        // w_r
  double road_length = 1000.0;
  double min_turn_radius = 12.0;  // R0
  double max_brake = 3.0;         // a_max^- (positive magnitude)
  double vehicle_length = 5.0;
  double vehicle_width = 2.0;
  double wheelbase = 2.5;
  double max_speed = 30.0;

  double width() const { return lane_count * lane_width; }
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  int lane_of(double y) const {
    int lane = static_cast<int>(std::floor(y / lane_width));
    if (lane < 0) lane = 0;
    if (lane >= lane_count) lane = lane_count - 1;
    return lane;
  }

  void validate() const {
    if (lane_count < 2) throw std::invalid_argument("road: lane_count must be >= 2");
    if (lane_width <= 0.0 || road_length <= 0.0 || vehicle_length <= 0.0 ||
        vehicle_width <= 0.0 || wheelbase <= 0.0 || max_speed <= 0.0) {
      throw std::invalid_argument("road: dimensions must be positive");
    }
    if (4.0 * min_turn_radius * lane_width - lane_width * lane_width <= 0.0) {
      throw std::invalid_argument("road: min_turn_radius must exceed lane_width/4");
    }
    if (max_brake <= 0.0) throw std::invalid_argument("road: max_brake must be positive");
  }
};

// One vehicle, ego or surrounding, in the road frame (x longitudinal,
// y lateral, y increasing toward the leftmost lane).
struct VehicleState {
  int lane_id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // phi, relative to the road axis
  double v_x = 0.0;
  double v_y = 0.0;
  double length = 5.0;
  double width = 2.0;
  double accel = 0.0;         // last applied longitudinal command
  double accel_x = 0.0;       // realized, from the last sim step
  double accel_y = 0.0;
  double target_speed = 20.0; // IDM desired speed (surrounding vehicles)

  // Lane-change blend bookkeeping; inactive for the ego vehicle.
  struct LaneChange {
    bool active = false;
    double t = 0.0;
    double duration = 2.0;
    double y_from = 0.0;
    double y_to = 0.0;
  };
  LaneChange lc;

  double speed() const { return std::hypot(v_x, v_y); }
  Pose pose() const { return {x, y, heading}; }
};

struct IdmParams {
  double headway = 1.5;        // T [s]
  double min_gap = 2.0;        // s0 [m]
  double accel_max = 3.0;      // a_max^+ [m/s^2]
  double brake_comfort = 2.0;  // b [m/s^2]
  double exponent = 4.0;
};

struct MobilParams {
  double politeness = 0.3;
  double threshold = 0.1;       // incentive gain needed [m/s^2]
  double safe_brake = 2.0;      // new follower decel limit [m/s^2]
  double change_duration = 2.0; // sinusoidal lateral blend [s]
  double check_period = 1.0;    // decision cadence per SV [s]
};

struct TrafficConfig {
  double density = 0.15;        // per-slot spawn probability
  double slot_length = 25.0;
  double ego_exclusion = 30.0;  // same-lane keep-out around ego [m]
  double sv_speed_min = 15.0;
  double sv_speed_max = 25.0;
  double spawn_jitter = 5.0;
  IdmParams idm;
  MobilParams mobil;

  void validate() const {
    if (density < 0.0 || density > 1.0) throw std::invalid_argument("traffic: density must be in [0,1]");
    if (slot_length <= 0.0) throw std::invalid_argument("traffic: slot_length must be positive");
    if (sv_speed_min <= 0.0 || sv_speed_max < sv_speed_min) {
      throw std::invalid_argument("traffic: bad SV speed range");
    }
  }
};

struct GuidanceConfig {
  int num_points = 10;     // g
  double x_cap = 160.0;    // cap on a_h, matches the observation range
  double min_floor = 2.0;  // epsilon_x floor on a_h_min [m]
};

using Observation = Eigen::VectorXd;  // kObsDim entries, all in [-1, 1]

}  // namespace hhrl
