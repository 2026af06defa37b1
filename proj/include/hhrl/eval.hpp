#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hhrl/trainer.hpp"

namespace hhrl {

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MetricsReport {
  int episodes = 0;
  MetricStat tr;       // total reward per episode
  MetricStat ds;       // driving speed [m/s]
  MetricStat tlc;      // total lane changes per episode
  MetricStat as;       // absolute steering [rad]
  MetricStat aa;       // absolute acceleration [m/s^2]
  MetricStat cdd;      // centerline departure distance [m]
  MetricStat cr;       // colliding-episode fraction
  MetricStat ttc_c;    // TTC, current lane [s]
  MetricStat ttc_t;    // TTC, target lane [s]

  std::string to_csv() const;
};

// Minimal per-step slice the metric aggregation consumes; identical whether
// it comes from a live rollout or a parsed trajectory log.
struct MetricSample {
  double speed = 0.0;
  double abs_steer = 0.0;
  double abs_accel = 0.0;
  double centerline_dev = 0.0;
  double ttc_current = 0.0;
  double ttc_target = 0.0;
  int ego_lane = 0;
  double reward = 0.0;
};

class MetricsAccumulator {
 public:
  void begin_episode();
  void add(const MetricSample& s);
  void end_episode(bool collided);
  MetricsReport report() const;

 private:
  struct EpisodeRow {
    double tr = 0, ds = 0, tlc = 0, as = 0, aa = 0, cdd = 0, cr = 0, ttc_c = 0, ttc_t = 0;
  };
  std::vector<EpisodeRow> rows_;
  std::vector<MetricSample> current_;
};

// Greedy deterministic evaluation over `episodes` episodes with per-episode
// seeds derived from `seed`. eta is held at 1; safety per flag.
MetricsReport evaluate(Policies& policies, const TrainConfig& cfg, int episodes,
                       std::uint64_t seed, bool safety_on);

// Writes one episode as a line-delimited self-describing trajectory log.
// Returns the episode result.
EpisodeResult rollout_log(Policies& policies, const TrainConfig& cfg,
                          std::uint64_t seed, const std::string& path, bool safety_on);

// -------- trajectory log parsing / replay --------

struct LogStep {
  double t = 0.0;
  int segment = 0;
  int index = 0;
  double ego_x = 0, ego_y = 0, ego_heading = 0, ego_vx = 0, ego_vy = 0;
  int ego_lane = 0;
  double steer = 0, accel = 0;
  double o_exec = 0, a_h_exec = 0, o_upd = 0, a_h_upd = 0;
  double k_high = 0, k_low = 0, eta = 0;
  int corr_high = 0, corr_low = 0, beta = 0, f_v = 0;
  double r_low = 0;
  double ttc_c = 0, ttc_t = 0;
};

struct ParsedLog {
  std::uint64_t seed = 0;
  RoadConfig road;
  double density = 0.0;
  std::vector<LogStep> steps;
  std::string end_kind = "none";  // collision | departure | none
};

ParsedLog parse_rollout_log(const std::string& path);

// Re-runs the simulator from the logged seed applying the logged commands;
// returns the max absolute deviation of the ego state across all steps.
double replay_deviation(const ParsedLog& log, const TrainConfig& cfg);

// Segment structure check: every segment has 1..n_max steps and exactly one
// terminating beta (the last record of the episode included).
bool check_segments(const ParsedLog& log, int n_max, std::string* why = nullptr);

MetricsReport metrics_from_log(const ParsedLog& log);

// -------- CLI --------
// Exposed as a function so the command surface is testable in-process.
int cli_main(const std::vector<std::string>& args);

}  // namespace hhrl
