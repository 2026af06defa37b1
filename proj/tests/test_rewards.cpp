#include <doctest.h>

#include "hhrl/rewards.hpp"
#include "hhrl/rng.hpp"

using namespace hhrl;

namespace {

SimState cruising(double speed) {
  RoadConfig road;
  TrafficConfig traffic;
  traffic.density = 0.0;
  SimState s = reset(road, traffic, 1);
  s.svs.clear();
  s.ego.v_x = speed;
  s.ego.v_y = 0.0;
  return s;
}

}  // namespace

TEST_SUITE("rewards") {

TEST_CASE("low_reward: ideal cruising scores exactly zero") {
  RewardConfig cfg;
  SimState s = cruising(cfg.target_speed);
  Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  CHECK(low_reward(s, zero, zero, 0.0, 0.0, false, cfg) == 0.0);
}

TEST_CASE("low_reward: violation contributes exactly -10") {
  RewardConfig cfg;
  SimState s = cruising(cfg.target_speed);
  Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  CHECK(low_reward(s, zero, zero, 0.0, 0.0, true, cfg) == doctest::Approx(-10.0));
}

TEST_CASE("low_reward: slow driving pays both efficiency terms") {
  RewardConfig cfg;  // v* = 20, v_p = 10
  SimState s = cruising(5.0);
  Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  // -|5-20|/20 - (10-5)/10 = -0.75 - 0.5
  CHECK(low_reward(s, zero, zero, 0.0, 0.0, false, cfg) == doctest::Approx(-1.25));
}

TEST_CASE("low_reward: command magnitudes and jumps are both charged") {
  RewardConfig cfg;
  SimState s = cruising(cfg.target_speed);
  Eigen::Vector2d cmd(0.1, -1.0), prev(0.0, 1.0);
  double expected = -(0.5 * 0.1 + 0.2 * 0.1) - (0.5 * 1.0 + 0.2 * 2.0);
  CHECK(low_reward(s, cmd, prev, 0.0, 0.0, false, cfg) == doctest::Approx(expected));
}

TEST_CASE("low_reward: never positive, strictly decreasing in risk") {
  RewardConfig cfg;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k) {
    SimState s = cruising(uniform(rng, 0.0, 30.0));
    Eigen::Vector2d cmd(uniform(rng, -0.5, 0.5), uniform(rng, -3.0, 3.0));
    Eigen::Vector2d prev(uniform(rng, -0.5, 0.5), uniform(rng, -3.0, 3.0));
    double k_h = uniform(rng, 0.0, 1.0), k_l = uniform(rng, 0.0, 1.0);
    bool f_v = uniform01(rng) < 0.2;
    double r = low_reward(s, cmd, prev, k_h, k_l, f_v, cfg);
    CHECK(r <= 0.0);
    CHECK(low_reward(s, cmd, prev, k_h + 0.1, k_l, f_v, cfg) < r);
    CHECK(low_reward(s, cmd, prev, k_h, k_l + 0.1, f_v, cfg) < r);
  }
}

TEST_CASE("high_reward: mean of the segment without violation") {
  CHECK(high_reward({1.0, 2.0, 3.0}, false, -10.0) == doctest::Approx(2.0));
  CHECK(high_reward({-0.7}, false, -10.0) == doctest::Approx(-0.7));
}

TEST_CASE("high_reward: violation routes fully to R_vio") {
  CHECK(high_reward({5.0, 5.0, 5.0}, true, -10.0) == -10.0);
}

TEST_CASE("high_reward: permutation invariant and empty-list error") {
  CHECK(high_reward({3.0, -1.0, 0.5}, false, -10.0) ==
        doctest::Approx(high_reward({0.5, 3.0, -1.0}, false, -10.0)));
  CHECK_THROWS_AS(high_reward({}, false, -10.0), std::invalid_argument);
}

}  // TEST_SUITE
