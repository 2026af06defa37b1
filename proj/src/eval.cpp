#include "hhrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "hhrl/config.hpp"
#include "hhrl/rng.hpp"

namespace hhrl {

namespace {

constexpr std::uint64_t kStreamEval = 2000;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

MetricStat stat_of(const std::vector<double>& xs) {
  MetricStat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / xs.size());
  return s;
}

MetricSample sample_from_step(const StepInfo& info, const RoadConfig& road) {
  const VehicleState& ego = info.state->ego;
  MetricSample s;
  s.speed = ego.speed();
  s.abs_steer = std::abs(info.cmd[0]);
  s.abs_accel = std::abs(info.cmd[1]);
  s.centerline_dev = std::abs(ego.y - road.lane_center(road.lane_of(ego.y)));
  s.ttc_current = info.ttc_current;
  s.ttc_target = info.ttc_target;
  s.ego_lane = info.ego_lane;
  s.reward = info.r_low;
  return s;
}

}  // namespace

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "metric,mean,std\n";
  auto row = [&](const char* name, const MetricStat& s) {
    os << name << "," << fmt(s.mean) << "," << fmt(s.stddev) << "\n";
  };
  row("TR", tr);
  row("DS", ds);
  row("TLC", tlc);
  row("AS", as);
  row("AA", aa);
  row("CDD", cdd);
  row("CR", cr);
  row("TTC-C", ttc_c);
  row("TTC-T", ttc_t);
  return os.str();
}

void MetricsAccumulator::begin_episode() { current_.clear(); }

void MetricsAccumulator::add(const MetricSample& s) { current_.push_back(s); }

void MetricsAccumulator::end_episode(bool collided) {
  EpisodeRow row;
  row.cr = collided ? 1.0 : 0.0;
  const double n = static_cast<double>(current_.size());
  for (std::size_t i = 0; i < current_.size(); ++i) {
    const MetricSample& s = current_[i];
    row.tr += s.reward;
    row.ds += s.speed / n;
    row.as += s.abs_steer / n;
    row.aa += s.abs_accel / n;
    row.cdd += s.centerline_dev / n;
    row.ttc_c += s.ttc_current / n;
    row.ttc_t += s.ttc_target / n;
    if (i > 0 && s.ego_lane != current_[i - 1].ego_lane) row.tlc += 1.0;
  }
  rows_.push_back(row);
  current_.clear();
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport rep;
  rep.episodes = static_cast<int>(rows_.size());
  auto collect = [&](auto member) {
    std::vector<double> xs;
    xs.reserve(rows_.size());
    for (const auto& r : rows_) xs.push_back(r.*member);
    return stat_of(xs);
  };
  rep.tr = collect(&EpisodeRow::tr);
  rep.ds = collect(&EpisodeRow::ds);
  rep.tlc = collect(&EpisodeRow::tlc);
  rep.as = collect(&EpisodeRow::as);
  rep.aa = collect(&EpisodeRow::aa);
  rep.cdd = collect(&EpisodeRow::cdd);
  rep.cr = collect(&EpisodeRow::cr);
  rep.ttc_c = collect(&EpisodeRow::ttc_c);
  rep.ttc_t = collect(&EpisodeRow::ttc_t);
  return rep;
}

MetricsReport evaluate(Policies& policies, const TrainConfig& cfg, int episodes,
                       std::uint64_t seed, bool safety_on) {
  MetricsAccumulator acc;
  RunOptions opts;
  opts.explore = false;
  opts.eta = 1.0;
  opts.safety_on = safety_on;

  for (int e = 0; e < episodes; ++e) {
    SimState state = reset(cfg.road, cfg.traffic, derive_seed(seed, kStreamEval + e));
    acc.begin_episode();
    StepHooks hooks;
    hooks.on_step = [&](const StepInfo& info) { acc.add(sample_from_step(info, cfg.road)); };
    run_episode(state, policies, cfg, opts, nullptr, hooks);
    acc.end_episode(state.violation_kind == ViolationKind::collision);
  }
  return acc.report();
}

EpisodeResult rollout_log(Policies& policies, const TrainConfig& cfg,
                          std::uint64_t seed, const std::string& path, bool safety_on) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("rollout: cannot open " + path + " for writing");

  const RoadConfig& road = cfg.road;
  os << "header seed=" << seed << " lanes=" << road.lane_count
     << " lane_width=" << fmt(road.lane_width) << " road_length=" << fmt(road.road_length)
     << " density=" << fmt(cfg.traffic.density) << " dt=" << fmt(cfg.dt)
     << " n_max=" << cfg.safety_cfg.n_max << " safety=" << (safety_on ? 1 : 0) << "\n";

  SimState state = reset(road, cfg.traffic, derive_seed(seed, kStreamEval));
  RunOptions opts;
  opts.explore = false;
  opts.eta = 1.0;
  opts.safety_on = safety_on;

  StepHooks hooks;
  hooks.on_step = [&](const StepInfo& info) {
    const VehicleState& ego = info.state->ego;
    os << "step t=" << fmt(info.t) << " seg=" << info.segment << " i=" << info.index
       << " lane=" << info.ego_lane << " x=" << fmt(ego.x) << " y=" << fmt(ego.y)
       << " phi=" << fmt(ego.heading) << " vx=" << fmt(ego.v_x) << " vy=" << fmt(ego.v_y)
       << " steer=" << fmt(info.cmd[0]) << " accel=" << fmt(info.cmd[1])
       << " o=" << fmt(offset_of_option(info.option_exec, road.lane_width))
       << " a_h=" << fmt(info.a_h_exec) << " o_u=" << fmt(info.updated_action.lateral)
       << " a_h_u=" << fmt(info.updated_action.longitudinal) << " kh=" << fmt(info.k_high)
       << " kl=" << fmt(info.k_low) << " eta=" << fmt(info.eta)
       << " ch=" << (info.corr_high_fired ? 1 : 0) << " cl=" << (info.corr_low_fired ? 1 : 0)
       << " beta=" << (info.beta ? 1 : 0) << " fv=" << (info.f_v ? 1 : 0)
       << " r=" << fmt(info.r_low) << " ttc_c=" << fmt(info.ttc_current)
       << " ttc_t=" << fmt(info.ttc_target);
    os << " g=";
    for (std::size_t j = 0; j < info.guidance->points.size(); ++j) {
      if (j > 0) os << ";";
      os << fmt(info.guidance->points[j].x()) << ":" << fmt(info.guidance->points[j].y());
    }
    for (const auto& sv : info.state->svs) {
      os << " sv=" << sv.lane_id << ":" << fmt(sv.x) << ":" << fmt(sv.y) << ":"
         << fmt(sv.heading) << ":" << fmt(sv.v_x) << ":" << fmt(sv.v_y);
    }
    os << "\n";
  };
  hooks.on_segment = [&](const SegmentInfo& seg) {
    os << "seg_end seg_n=" << seg.n
       << " o=" << fmt(offset_of_option(seg.transition.option, road.lane_width))
       << " a_h=" << fmt(seg.transition.a_h) << " r_h=" << fmt(seg.transition.r)
       << " terminal=" << (seg.transition.terminal ? 1 : 0)
       << " corr=" << (seg.corr_fired ? 1 : 0) << "\n";
  };

  EpisodeResult result = run_episode(state, policies, cfg, opts, nullptr, hooks);
  os << "end fv=" << (state.violation ? 1 : 0) << " kind="
     << (state.violation_kind == ViolationKind::collision
             ? "collision"
             : state.violation_kind == ViolationKind::road_departure ? "departure" : "none")
     << " steps=" << result.steps << "\n";
  if (!os) throw std::runtime_error("rollout: write failed for " + path);
  return result;
}

namespace {

// key=value tokens; unknown keys are tolerated so the format can grow.
std::map<std::string, std::string> parse_fields(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::istringstream is(line);
  std::string token;
  is >> token;  // record kind, handled by the caller
  while (is >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

double field_d(const std::map<std::string, std::string>& f, const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw std::runtime_error("log: missing field " + key);
  return std::stod(it->second);
}

int field_i(const std::map<std::string, std::string>& f, const std::string& key) {
  return static_cast<int>(std::llround(field_d(f, key)));
}

}  // namespace

ParsedLog parse_rollout_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("log: cannot open " + path);
  ParsedLog log;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream probe(line);
    std::string kind;
    probe >> kind;
    auto fields = parse_fields(line);
    if (kind == "header") {
      log.seed = static_cast<std::uint64_t>(std::stoull(fields.at("seed")));
      log.road.lane_count = field_i(fields, "lanes");
      log.road.lane_width = field_d(fields, "lane_width");
      log.road.road_length = field_d(fields, "road_length");
      log.density = field_d(fields, "density");
    } else if (kind == "step") {
      LogStep s;
      s.t = field_d(fields, "t");
      s.segment = field_i(fields, "seg");
      s.index = field_i(fields, "i");
      s.ego_lane = field_i(fields, "lane");
      s.ego_x = field_d(fields, "x");
      s.ego_y = field_d(fields, "y");
      s.ego_heading = field_d(fields, "phi");
      s.ego_vx = field_d(fields, "vx");
      s.ego_vy = field_d(fields, "vy");
      s.steer = field_d(fields, "steer");
      s.accel = field_d(fields, "accel");
      s.o_exec = field_d(fields, "o");
      s.a_h_exec = field_d(fields, "a_h");
      s.o_upd = field_d(fields, "o_u");
      s.a_h_upd = field_d(fields, "a_h_u");
      s.k_high = field_d(fields, "kh");
      s.k_low = field_d(fields, "kl");
      s.eta = field_d(fields, "eta");
      s.corr_high = field_i(fields, "ch");
      s.corr_low = field_i(fields, "cl");
      s.beta = field_i(fields, "beta");
      s.f_v = field_i(fields, "fv");
      s.r_low = field_d(fields, "r");
      s.ttc_c = field_d(fields, "ttc_c");
      s.ttc_t = field_d(fields, "ttc_t");
      log.steps.push_back(s);
    } else if (kind == "end") {
      log.end_kind = fields.at("kind");
    }
  }
  return log;
}

double replay_deviation(const ParsedLog& log, const TrainConfig& cfg) {
  SimState state = reset(cfg.road, cfg.traffic, derive_seed(log.seed, kStreamEval));
  double worst = 0.0;
  for (const auto& s : log.steps) {
    advance(state, s.steer, s.accel, cfg.dt);
    worst = std::max(worst, std::abs(state.ego.x - s.ego_x));
    worst = std::max(worst, std::abs(state.ego.y - s.ego_y));
    worst = std::max(worst, std::abs(state.ego.heading - s.ego_heading));
    worst = std::max(worst, std::abs(state.ego.v_x - s.ego_vx));
    worst = std::max(worst, std::abs(state.ego.v_y - s.ego_vy));
  }
  return worst;
}

bool check_segments(const ParsedLog& log, int n_max, std::string* why) {
  auto fail = [&](const std::string& message) {
    if (why != nullptr) *why = message;
    return false;
  };
  if (log.steps.empty()) return fail("log has no steps");
  int expected_segment = 0;
  int expected_index = 1;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const LogStep& s = log.steps[i];
    if (s.segment != expected_segment) return fail("segment index out of order");
    if (s.index != expected_index) return fail("step index out of order");
    if (s.index < 1 || s.index > n_max) return fail("segment longer than n_max");
    if (s.beta != 0) {
      ++expected_segment;
      expected_index = 1;
    } else {
      if (i + 1 == log.steps.size()) return fail("episode ended without beta");
      ++expected_index;
    }
  }
  if (log.steps.back().beta != 1) return fail("last step must terminate its segment");
  return true;
}

MetricsReport metrics_from_log(const ParsedLog& log) {
  MetricsAccumulator acc;
  acc.begin_episode();
  bool collided = log.end_kind == "collision";
  for (const auto& s : log.steps) {
    MetricSample m;
    m.speed = std::hypot(s.ego_vx, s.ego_vy);
    m.abs_steer = std::abs(s.steer);
    m.abs_accel = std::abs(s.accel);
    m.centerline_dev =
        std::abs(s.ego_y - log.road.lane_center(log.road.lane_of(s.ego_y)));
    m.ttc_current = s.ttc_c;
    m.ttc_target = s.ttc_t;
    m.ego_lane = s.ego_lane;
    m.reward = s.r_low;
    acc.add(m);
  }
  acc.end_episode(collided);
  return acc.report();
}

// ---------------- CLI ----------------

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::string checkpoint;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int episodes = -1;
  bool no_safety = false;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool wants_checkpoint) {
  cmd->add_option("--config", flags.config_path, "experiment config file (key=value)");
  cmd->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--episodes", flags.episodes, "episode count override");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_flag("--no-safety", flags.no_safety, "disable the hierarchical safety mechanism");
  cmd->add_flag("--paper-scale", flags.paper_scale,
                "paper-scale preset: 2000 episodes, traffic density 0.3");
  if (wants_checkpoint) {
    cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint file")->required();
  }
}

AppConfig resolve_config(const CommonFlags& flags) {
  std::optional<std::string> path;
  if (!flags.config_path.empty()) path = flags.config_path;
  AppConfig cfg = load_app_config(path);
  if (flags.paper_scale) {
    cfg.train.episodes = 2000;
    cfg.train.traffic.density = 0.3;
  }
  if (flags.seed_set) cfg.train.seed = flags.seed;
  if (flags.no_safety) cfg.train.safety = false;
  return cfg;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"hierarchical highway driving: training, evaluation and rollout logging"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, rollout_flags;
  std::string inspect_path;

  CLI::App* cmd_train = app.add_subcommand("train", "train policies and write checkpoints");
  add_common(cmd_train, train_flags, false);

  CLI::App* cmd_eval = app.add_subcommand("evaluate", "deterministic metric evaluation");
  add_common(cmd_eval, eval_flags, true);

  CLI::App* cmd_rollout = app.add_subcommand("rollout", "write trajectory logs");
  add_common(cmd_rollout, rollout_flags, true);

  CLI::App* cmd_inspect =
      app.add_subcommand("inspect-checkpoint", "print network shapes and parameter norms");
  cmd_inspect->add_option("checkpoint", inspect_path, "checkpoint file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cmd_train->parsed()) {
      AppConfig cfg = resolve_config(train_flags);
      if (train_flags.episodes >= 0) cfg.train.episodes = train_flags.episodes;
      TrainResult result = train(cfg.train, train_flags.out_dir);
      if (result.aborted) {
        std::cerr << "training aborted: " << result.abort_reason << "\n";
        return 2;
      }
      std::cout << "trained " << result.log.size() << " episodes\n"
                << "log: " << result.log_path << "\n"
                << "checkpoint: " << result.checkpoint_path << "\n";
      return 0;
    }
    if (cmd_eval->parsed()) {
      AppConfig cfg = resolve_config(eval_flags);
      int episodes = eval_flags.episodes >= 0 ? eval_flags.episodes : cfg.eval_episodes;
      Policies policies = load_policies(eval_flags.checkpoint, cfg.train);
      MetricsReport report = evaluate(policies, cfg.train, episodes, cfg.train.seed,
                                      cfg.train.safety);
      std::filesystem::create_directories(eval_flags.out_dir);
      std::string csv_path = eval_flags.out_dir + "/metrics.csv";
      std::ofstream os(csv_path);
      if (!os) throw std::runtime_error("evaluate: cannot open " + csv_path);
      os << report.to_csv();
      std::cout << report.to_csv();
      std::cout << "episodes: " << report.episodes << "\nwrote " << csv_path << "\n";
      return 0;
    }
    if (cmd_rollout->parsed()) {
      AppConfig cfg = resolve_config(rollout_flags);
      int episodes = rollout_flags.episodes >= 0 ? rollout_flags.episodes : 1;
      Policies policies = load_policies(rollout_flags.checkpoint, cfg.train);
      std::filesystem::create_directories(rollout_flags.out_dir);
      for (int e = 0; e < episodes; ++e) {
        char name[64];
        std::snprintf(name, sizeof(name), "/rollout_seed%llu_ep%03d.log",
                      static_cast<unsigned long long>(cfg.train.seed), e);
        rollout_log(policies, cfg.train, cfg.train.seed + e, rollout_flags.out_dir + name,
                    cfg.train.safety);
        std::cout << "wrote " << rollout_flags.out_dir + name << "\n";
      }
      return 0;
    }
    if (cmd_inspect->parsed()) {
      auto nets = load_checkpoint(inspect_path);
      for (const auto& loaded : nets) {
        std::cout << loaded.name << ": layers";
        for (int s : loaded.net.layer_sizes) std::cout << " " << s;
        std::cout << "\n";
        for (int l = 0; l < loaded.net.layer_count(); ++l) {
          std::cout << "  layer " << l << " |W|=" << fmt(loaded.net.weights[l].norm())
                    << " |b|=" << fmt(loaded.net.biases[l].norm()) << "\n";
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace hhrl
