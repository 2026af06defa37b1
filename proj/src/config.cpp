#include "hhrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace hhrl {

namespace {

struct KeyEntry {
  std::string key;
  std::function<void(AppConfig&, const std::string&)> set;
  std::function<std::string(const AppConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + value + "'");
  }
}

std::vector<KeyEntry> key_table() {
  std::vector<KeyEntry> table;
  auto add_d = [&](const std::string& key, std::function<double&(AppConfig&)> ref) {
    table.push_back({key,
                     [key, ref](AppConfig& c, const std::string& v) { ref(c) = to_double(key, v); },
                     [ref](const AppConfig& c) {
                       return fmt_double(ref(const_cast<AppConfig&>(c)));
                     }});
  };
  auto add_i = [&](const std::string& key, std::function<int&(AppConfig&)> ref) {
    table.push_back({key,
                     [key, ref](AppConfig& c, const std::string& v) {
                       ref(c) = static_cast<int>(to_long(key, v));
                     },
                     [ref](const AppConfig& c) {
                       return std::to_string(ref(const_cast<AppConfig&>(c)));
                     }});
  };
  auto add_u64 = [&](const std::string& key, std::function<std::uint64_t&(AppConfig&)> ref) {
    table.push_back({key,
                     [key, ref](AppConfig& c, const std::string& v) {
                       ref(c) = static_cast<std::uint64_t>(to_long(key, v));
                     },
                     [ref](const AppConfig& c) {
                       return std::to_string(ref(const_cast<AppConfig&>(c)));
                     }});
  };
  auto add_b = [&](const std::string& key, std::function<bool&(AppConfig&)> ref) {
    table.push_back({key,
                     [key, ref](AppConfig& c, const std::string& v) {
                       if (v != "0" && v != "1") {
                         throw std::invalid_argument("config: " + key + " must be 0 or 1");
                       }
                       ref(c) = v == "1";
                     },
                     [ref](const AppConfig& c) {
                       return ref(const_cast<AppConfig&>(c)) ? std::string("1") : std::string("0");
                     }});
  };

  add_i("sim.lane_count", [](AppConfig& c) -> int& { return c.train.road.lane_count; });
  add_d("sim.lane_width", [](AppConfig& c) -> double& { return c.train.road.lane_width; });
  add_d("sim.road_length", [](AppConfig& c) -> double& { return c.train.road.road_length; });
  add_d("sim.min_turn_radius",
        [](AppConfig& c) -> double& { return c.train.road.min_turn_radius; });
  add_d("sim.max_brake", [](AppConfig& c) -> double& { return c.train.road.max_brake; });
  add_d("sim.vehicle_length",
        [](AppConfig& c) -> double& { return c.train.road.vehicle_length; });
  add_d("sim.vehicle_width", [](AppConfig& c) -> double& { return c.train.road.vehicle_width; });
  add_d("sim.wheelbase", [](AppConfig& c) -> double& { return c.train.road.wheelbase; });
  add_d("sim.max_speed", [](AppConfig& c) -> double& { return c.train.road.max_speed; });

  add_d("traffic.density", [](AppConfig& c) -> double& { return c.train.traffic.density; });
  add_d("traffic.slot_length",
        [](AppConfig& c) -> double& { return c.train.traffic.slot_length; });
  add_d("traffic.ego_exclusion",
        [](AppConfig& c) -> double& { return c.train.traffic.ego_exclusion; });
  add_d("traffic.sv_speed_min",
        [](AppConfig& c) -> double& { return c.train.traffic.sv_speed_min; });
  add_d("traffic.sv_speed_max",
        [](AppConfig& c) -> double& { return c.train.traffic.sv_speed_max; });
  add_d("traffic.spawn_jitter",
        [](AppConfig& c) -> double& { return c.train.traffic.spawn_jitter; });
  add_d("traffic.idm.headway",
        [](AppConfig& c) -> double& { return c.train.traffic.idm.headway; });
  add_d("traffic.idm.min_gap",
        [](AppConfig& c) -> double& { return c.train.traffic.idm.min_gap; });
  add_d("traffic.idm.accel_max",
        [](AppConfig& c) -> double& { return c.train.traffic.idm.accel_max; });
  add_d("traffic.idm.brake_comfort",
        [](AppConfig& c) -> double& { return c.train.traffic.idm.brake_comfort; });
  add_d("traffic.idm.exponent",
        [](AppConfig& c) -> double& { return c.train.traffic.idm.exponent; });
  add_d("traffic.mobil.politeness",
        [](AppConfig& c) -> double& { return c.train.traffic.mobil.politeness; });
  add_d("traffic.mobil.threshold",
        [](AppConfig& c) -> double& { return c.train.traffic.mobil.threshold; });
  add_d("traffic.mobil.safe_brake",
        [](AppConfig& c) -> double& { return c.train.traffic.mobil.safe_brake; });
  add_d("traffic.mobil.change_duration",
        [](AppConfig& c) -> double& { return c.train.traffic.mobil.change_duration; });
  add_d("traffic.mobil.check_period",
        [](AppConfig& c) -> double& { return c.train.traffic.mobil.check_period; });

  add_i("guidance.points", [](AppConfig& c) -> int& { return c.train.guidance.num_points; });
  add_d("guidance.x_cap", [](AppConfig& c) -> double& { return c.train.guidance.x_cap; });
  add_d("guidance.min_floor",
        [](AppConfig& c) -> double& { return c.train.guidance.min_floor; });

  add_d("apf.w1", [](AppConfig& c) -> double& { return c.train.apf.w1; });
  add_d("apf.x_safe", [](AppConfig& c) -> double& { return c.train.apf.x_safe; });
  add_d("apf.y_safe", [](AppConfig& c) -> double& { return c.train.apf.y_safe; });
  add_d("apf.decay", [](AppConfig& c) -> double& { return c.train.apf.decay; });

  add_d("safety.risk_threshold",
        [](AppConfig& c) -> double& { return c.train.safety_cfg.risk_threshold; });
  add_i("safety.n_max", [](AppConfig& c) -> int& { return c.train.safety_cfg.n_max; });
  add_d("safety.ttc_cap", [](AppConfig& c) -> double& { return c.train.safety_cfg.ttc_cap; });

  add_d("reward.target_speed",
        [](AppConfig& c) -> double& { return c.train.reward.target_speed; });
  add_d("reward.penalty_speed",
        [](AppConfig& c) -> double& { return c.train.reward.penalty_speed; });
  add_d("reward.violation_reward",
        [](AppConfig& c) -> double& { return c.train.reward.violation_reward; });
  add_d("reward.violation_weight",
        [](AppConfig& c) -> double& { return c.train.reward.violation_weight; });
  add_d("reward.risk_weight", [](AppConfig& c) -> double& { return c.train.reward.risk_weight; });
  add_d("reward.cmd_weight", [](AppConfig& c) -> double& { return c.train.reward.cmd_weight; });
  add_d("reward.delta_weight",
        [](AppConfig& c) -> double& { return c.train.reward.delta_weight; });

  add_d("prior.stanley_gain",
        [](AppConfig& c) -> double& { return c.train.prior.stanley_gain; });
  add_d("prior.v_soft", [](AppConfig& c) -> double& { return c.train.prior.v_soft; });
  add_d("prior.headway", [](AppConfig& c) -> double& { return c.train.prior.headway; });
  add_d("prior.fallback_speed",
        [](AppConfig& c) -> double& { return c.train.prior.fallback_speed; });

  add_i("train.episodes", [](AppConfig& c) -> int& { return c.train.episodes; });
  add_d("train.dt", [](AppConfig& c) -> double& { return c.train.dt; });
  add_d("train.horizon", [](AppConfig& c) -> double& { return c.train.horizon; });
  add_u64("train.seed", [](AppConfig& c) -> std::uint64_t& { return c.train.seed; });
  add_i("train.low_capacity", [](AppConfig& c) -> int& { return c.train.low_capacity; });
  add_i("train.high_capacity", [](AppConfig& c) -> int& { return c.train.high_capacity; });
  add_i("train.batch", [](AppConfig& c) -> int& { return c.train.batch; });
  add_i("train.low_warmup", [](AppConfig& c) -> int& { return c.train.low_warmup; });
  add_i("train.high_warmup", [](AppConfig& c) -> int& { return c.train.high_warmup; });
  add_d("train.gamma", [](AppConfig& c) -> double& { return c.train.gamma; });
  add_d("train.tau", [](AppConfig& c) -> double& { return c.train.tau; });
  add_d("train.lr_actor", [](AppConfig& c) -> double& { return c.train.lr_actor; });
  add_d("train.lr_critic", [](AppConfig& c) -> double& { return c.train.lr_critic; });
  add_d("train.eps_start", [](AppConfig& c) -> double& { return c.train.eps_start; });
  add_d("train.eps_end", [](AppConfig& c) -> double& { return c.train.eps_end; });
  add_d("train.eps_fraction", [](AppConfig& c) -> double& { return c.train.eps_fraction; });
  add_d("train.sigma_start", [](AppConfig& c) -> double& { return c.train.sigma_start; });
  add_d("train.sigma_end", [](AppConfig& c) -> double& { return c.train.sigma_end; });
  add_d("train.eta_fraction", [](AppConfig& c) -> double& { return c.train.eta_fraction; });
  add_i("train.checkpoint_every",
        [](AppConfig& c) -> int& { return c.train.checkpoint_every; });
  add_b("train.safety", [](AppConfig& c) -> bool& { return c.train.safety; });

  add_i("eval.episodes", [](AppConfig& c) -> int& { return c.eval_episodes; });
  return table;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

AppConfig load_app_config(const std::optional<std::string>& path) {
  AppConfig cfg;
  if (path.has_value()) {
    std::ifstream is(*path);
    if (!is) throw std::runtime_error("config: cannot open " + *path);
    auto table = key_table();
    std::map<std::string, const KeyEntry*> lookup;
    for (const auto& entry : table) lookup[entry.key] = &entry;

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("config: line " + std::to_string(line_no) +
                                 " is not key=value: '" + line + "'");
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        throw std::runtime_error("config: unknown key '" + key + "' (line " +
                                 std::to_string(line_no) + ")");
      }
      it->second->set(cfg, value);
    }
  }
  cfg.train.validate();
  if (cfg.eval_episodes < 1) throw std::invalid_argument("config: eval.episodes must be >= 1");
  return cfg;
}

std::string dump_config(const AppConfig& cfg) {
  std::ostringstream os;
  for (const auto& entry : key_table()) {
    os << entry.key << "=" << entry.get(cfg) << "\n";
  }
  return os.str();
}

}  // namespace hhrl
