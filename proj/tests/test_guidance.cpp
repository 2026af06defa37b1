#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hhrl/guidance.hpp"
#include "hhrl/rng.hpp"

using namespace hhrl;

namespace {

VehicleState ego_at(const RoadConfig& road, int lane, double speed, double heading = 0.0,
                    double lateral_offset = 0.0) {
  VehicleState e;
  e.lane_id = lane;
  e.x = 100.0;
  e.y = road.lane_center(lane) + lateral_offset;
  e.heading = heading;
  e.v_x = speed * std::cos(heading);
  e.v_y = speed * std::sin(heading);
  return e;
}

double boundary_residual(const MotionGuidance& g, double dy_target, double tan_phi) {
  double length = g.endpoint().x();
  double worst = 0.0;
  worst = std::max(worst, std::abs(quintic_eval(g.coeffs, 0.0)));
  worst = std::max(worst, std::abs(quintic_slope(g.coeffs, 0.0) - tan_phi));
  worst = std::max(worst, std::abs(quintic_curv2(g.coeffs, 0.0)));
  worst = std::max(worst, std::abs(quintic_eval(g.coeffs, length) - dy_target));
  worst = std::max(worst, std::abs(quintic_slope(g.coeffs, length)));
  worst = std::max(worst, std::abs(quintic_curv2(g.coeffs, length)));
  return worst;
}

}  // namespace

TEST_SUITE("guidance") {

TEST_CASE("bounds: turning-radius term dominates at moderate speed") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  HybridActionSpace space = hybrid_bounds(ego, road, cfg);
  CHECK(space.a_min == doctest::Approx(std::sqrt(176.0)).epsilon(1e-12));
  CHECK(space.a_max == doctest::Approx(160.0));
  CHECK(space.available[0]);
  CHECK(space.available[1]);
  CHECK(space.available[2]);
}

TEST_CASE("bounds: zero speed hits the floor") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 0.0);
  HybridActionSpace space = hybrid_bounds(ego, road, cfg);
  CHECK(space.a_min == doctest::Approx(cfg.min_floor));
  CHECK(space.a_max == doctest::Approx(std::exp(4.0)));  // e^(0 + w_r)
}

TEST_CASE("bounds: road edges remove the outward option") {
  RoadConfig road;
  GuidanceConfig cfg;
  HybridActionSpace leftmost = hybrid_bounds(ego_at(road, road.lane_count - 1, 10.0), road, cfg);
  CHECK_FALSE(leftmost.available[2]);
  CHECK(leftmost.available[0]);
  HybridActionSpace rightmost = hybrid_bounds(ego_at(road, 0, 10.0), road, cfg);
  CHECK_FALSE(rightmost.available[0]);
  CHECK(rightmost.available[2]);
}

TEST_CASE("bounds: a_min is non-decreasing in speed where braking dominates") {
  RoadConfig road;
  GuidanceConfig cfg;
  double prev = 0.0;
  for (double v = 0.0; v <= 9.0; v += 0.25) {
    HybridActionSpace space = hybrid_bounds(ego_at(road, 1, v), road, cfg);
    CHECK(space.a_min >= prev - 1e-12);
    prev = space.a_min;
  }
}

TEST_CASE("build: lane keeping from a centered ego is the zero quintic") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({0.0, 20.0}, ego, road, cfg);
  for (int m = 0; m < 6; ++m) CHECK(std::abs(g.coeffs[m]) < 1e-12);
  for (const auto& p : g.points) CHECK(std::abs(p.y()) < 1e-12);
  CHECK(g.points.front().x() == 0.0);
  CHECK(g.points.front().y() == 0.0);
}

TEST_CASE("build: lane-change coefficients match the direct 6x6 solve") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({4.0, 20.0}, ego, road, cfg);
  CHECK(g.coeffs[0] == doctest::Approx(0.0));
  CHECK(g.coeffs[1] == doctest::Approx(0.0));
  CHECK(g.coeffs[2] == doctest::Approx(0.0));
  CHECK(g.coeffs[3] == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(g.coeffs[4] == doctest::Approx(-3.75e-4).epsilon(1e-9));
  CHECK(g.coeffs[5] == doctest::Approx(7.5e-6).epsilon(1e-9));

  // Independent oracle: the raw unscaled boundary system.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(6);
  double length = 20.0;
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  a(2, 2) = 2.0;
  for (int m = 0; m < 6; ++m) {
    a(3, m) = std::pow(length, m);
    a(4, m) = m * std::pow(length, m - 1);
    a(5, m) = m * (m - 1) * std::pow(length, std::max(0, m - 2));
  }
  b[3] = 4.0;
  Eigen::VectorXd c = a.fullPivLu().solve(b);
  for (int m = 0; m < 6; ++m) CHECK(g.coeffs[m] == doctest::Approx(c[m]).epsilon(1e-7));
}

TEST_CASE("build: endpoint hits the target and a_h <= 0 is rejected") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 0, 12.0, 0.05, 0.7);
  MotionGuidance g = build_guidance({4.0, 30.0}, ego, road, cfg);
  CHECK(g.endpoint().x() == doctest::Approx(30.0));
  CHECK(g.anchor.y + g.endpoint().y() == doctest::Approx(road.lane_center(1)));
  CHECK_THROWS_AS(build_guidance({0.0, 0.0}, ego, road, cfg), std::invalid_argument);
  CHECK_THROWS_AS(build_guidance({0.0, -5.0}, ego, road, cfg), std::invalid_argument);
}

TEST_CASE("build: boundary residuals stay below 1e-9 on random actions") {
  RoadConfig road;
  GuidanceConfig cfg;
  std::mt19937_64 rng(17);
  for (int k = 0; k < 1000; ++k) {
    int lane = uniform_int(rng, road.lane_count);
    VehicleState ego = ego_at(road, lane, uniform(rng, 0.0, 28.0), uniform(rng, -0.3, 0.3),
                              uniform(rng, -1.8, 1.8));
    HybridActionSpace space = hybrid_bounds(ego, road, cfg);
    int option = uniform_int(rng, 3);
    while (!space.available[option]) option = uniform_int(rng, 3);
    HybridAction action{space.offset(option), uniform(rng, space.a_min, space.a_max)};
    MotionGuidance g = build_guidance(action, ego, road, cfg);

    int target_lane = lane + option - 1;
    double dy = road.lane_center(target_lane) - ego.y;
    CHECK(boundary_residual(g, dy, std::tan(ego.heading)) < 1e-9);
    for (const auto& p : g.points) {
      CHECK(std::abs(quintic_eval(g.coeffs, p.x()) - p.y()) < 1e-9);
    }
  }
}

TEST_CASE("invert: round-trip is exact on o and tight on a_h") {
  RoadConfig road;
  GuidanceConfig cfg;
  std::mt19937_64 rng(23);
  for (int k = 0; k < 1000; ++k) {
    int lane = uniform_int(rng, road.lane_count);
    VehicleState ego = ego_at(road, lane, uniform(rng, 0.0, 28.0), uniform(rng, -0.3, 0.3),
                              uniform(rng, -1.8, 1.8));
    HybridActionSpace space = hybrid_bounds(ego, road, cfg);
    int option = uniform_int(rng, 3);
    while (!space.available[option]) option = uniform_int(rng, 3);
    HybridAction action{space.offset(option), uniform(rng, space.a_min, space.a_max)};
    MotionGuidance g = build_guidance(action, ego, road, cfg);
    HybridAction back = invert_guidance(g, ego, road);
    CHECK(back.lateral == action.lateral);
    CHECK(std::abs(back.longitudinal - action.longitudinal) < 1e-9);
  }
}

TEST_CASE("invert: endpoint offsets quantize to the nearest lane") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({0.0, 30.0}, ego, road, cfg);
  // Push the endpoint 3.9 m left of the ego lane center.
  for (auto& p : g.points) p.y() += 3.9;
  HybridAction back = invert_guidance(g, ego, road);
  CHECK(back.lateral == doctest::Approx(4.0));

  MotionGuidance keep = build_guidance({0.0, 30.0}, ego, road, cfg);
  CHECK(invert_guidance(keep, ego, road).lateral == 0.0);
}

TEST_CASE("invert: endpoint behind the ego is an error") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({0.0, 10.0}, ego, road, cfg);
  for (auto& p : g.points) p.x() -= 20.0;
  CHECK_THROWS_AS(invert_guidance(g, ego, road), std::invalid_argument);
}

TEST_CASE("update: pure forward motion shifts x and keeps y") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({4.0, 30.0}, ego, road, cfg);
  Pose from = ego.pose();
  Pose to = from;
  to.x += 5.0;
  GuidanceUpdate upd = update_guidance(g, from, to, road);
  REQUIRE_FALSE(upd.exhausted);
  std::size_t dropped = g.points.size() - upd.guidance.points.size();
  for (std::size_t j = 0; j < upd.guidance.points.size(); ++j) {
    CHECK(upd.guidance.points[j].x() ==
          doctest::Approx(g.points[j + dropped].x() - 5.0).epsilon(1e-12));
    CHECK(upd.guidance.points[j].y() == doctest::Approx(g.points[j + dropped].y()));
  }
}

TEST_CASE("update: crossing the divider relabels the action as lane keeping") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 12.0);
  MotionGuidance g = build_guidance({4.0, 30.0}, ego, road, cfg);
  CHECK(invert_guidance(g, ego, road).lateral == doctest::Approx(4.0));
  Pose from = ego.pose();
  Pose to = from;
  to.x += 8.0;
  to.y += 2.5;  // past the divider at +2 m
  GuidanceUpdate upd = update_guidance(g, from, to, road);
  REQUIRE_FALSE(upd.exhausted);
  CHECK(upd.action.lateral == 0.0);
  CHECK(upd.action.longitudinal == doctest::Approx(30.0 - 8.0));
}

TEST_CASE("update: world-frame locations survive arbitrary motion") {
  RoadConfig road;
  GuidanceConfig cfg;
  std::mt19937_64 rng(31);
  for (int k = 0; k < 1000; ++k) {
    VehicleState ego = ego_at(road, uniform_int(rng, road.lane_count), uniform(rng, 5.0, 25.0),
                              uniform(rng, -0.2, 0.2), uniform(rng, -1.5, 1.5));
    HybridActionSpace space = hybrid_bounds(ego, road, cfg);
    int option = uniform_int(rng, 3);
    while (!space.available[option]) option = uniform_int(rng, 3);
    MotionGuidance g = build_guidance({space.offset(option), uniform(rng, space.a_min, 40.0)},
                                      ego, road, cfg);
    Pose from = ego.pose();
    Pose to{from.x + uniform(rng, 0.0, 3.0), from.y + uniform(rng, -0.5, 0.5),
            uniform(rng, -0.2, 0.2)};
    GuidanceUpdate upd = update_guidance(g, from, to, road);
    CHECK(upd.guidance.points.size() <= g.points.size());
    if (upd.exhausted) continue;
    std::size_t dropped = g.points.size() - upd.guidance.points.size();
    for (std::size_t j = 0; j < upd.guidance.points.size(); ++j) {
      double wx_before = from.x + g.points[j + dropped].x();
      double wy_before = from.y + g.points[j + dropped].y();
      double wx_after = to.x + upd.guidance.points[j].x();
      double wy_after = to.y + upd.guidance.points[j].y();
      CHECK(std::abs(wx_before - wx_after) < 1e-9);
      CHECK(std::abs(wy_before - wy_after) < 1e-9);
      // The shifted coefficients still interpolate the surviving points.
      CHECK(std::abs(quintic_eval(upd.guidance.coeffs, upd.guidance.points[j].x()) -
                     upd.guidance.points[j].y()) < 1e-9);
    }
  }
}

TEST_CASE("update: passing the endpoint signals exhaustion") {
  RoadConfig road;
  GuidanceConfig cfg;
  VehicleState ego = ego_at(road, 1, 10.0);
  MotionGuidance g = build_guidance({0.0, 5.0}, ego, road, cfg);
  Pose from = ego.pose();
  Pose to = from;
  to.x += 6.0;
  GuidanceUpdate upd = update_guidance(g, from, to, road);
  CHECK(upd.exhausted);
  CHECK(upd.guidance.points.empty());
}

}  // TEST_SUITE
