#ifndef IGT_RUNNER_CONFIG_HPP
#define IGT_RUNNER_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace igt::runner {

using json = nlohmann::json;

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Experiment { noise_propagation, quadratic, lqr, hb_rate, spectral_sweep };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::noise_propagation: return "noise-propagation";
    case Experiment::quadratic: return "quadratic";
    case Experiment::lqr: return "lqr";
    case Experiment::hb_rate: return "hb-rate";
    case Experiment::spectral_sweep: return "spectral-sweep";
  }
  return "unknown";
}

inline Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::noise_propagation, Experiment::quadratic,
                       Experiment::lqr, Experiment::hb_rate,
                       Experiment::spectral_sweep})
    if (to_string(e) == name) return e;
  throw config_error("unknown experiment '" + name + "'");
}

inline const std::vector<std::string>& known_methods(Experiment e) {
  static const std::vector<std::string> noise{"sgd", "momentum-0.9",
                                              "momentum-inc", "igt"};
  static const std::vector<std::string> quad{
      "sgd", "hb", "igt", "hb-igt", "ita", "hb-ita", "adam", "adam-ita"};
  static const std::vector<std::string> lqr{"gd", "sgd", "ita"};
  static const std::vector<std::string> rate{"hb", "hb-igt"};
  static const std::vector<std::string> sweep{"hb-igt"};
  switch (e) {
    case Experiment::noise_propagation: return noise;
    case Experiment::quadratic: return quad;
    case Experiment::lqr: return lqr;
    case Experiment::hb_rate: return rate;
    case Experiment::spectral_sweep: return sweep;
  }
  return quad;
}

struct LqrOverrides {
  int n_traj = 100;
  int iterations = 2000;
  std::optional<double> filter_factor = 10.0;
  int state_dim = 20;
  int action_dim = 12;
  int horizon = 10;
};

/// Every experiment reads the subset of fields it needs. Unset stepsize and
/// momentum fall back to the experiment's own rule (1/L, optimal tuning, or
/// the stability sweep).
struct ExperimentConfig {
  Experiment experiment = Experiment::quadratic;
  std::vector<std::string> methods;
  int d = 100;
  double kappa = 1000.0;
  double L = 1.0;
  double noise_std = std::sqrt(0.3);
  std::optional<double> alpha;
  std::optional<double> mu;
  double c = 0.5;
  double adam_eps = 1e-8;
  int steps = 10000;
  std::vector<std::uint64_t> seeds;
  std::uint64_t problem_seed = 0;
  std::string output_dir;
  int record_every = 1;
  int threads = 0;  // 0: hardware concurrency
  LqrOverrides lqr;

  void validate() const {
    auto fail = [](const std::string& m) { throw config_error(m); };
    if (methods.empty()) fail("methods must not be empty");
    const auto& known = known_methods(experiment);
    for (const std::string& m : methods) {
      bool ok = false;
      for (const std::string& k : known) ok = ok || k == m;
      if (!ok) fail("method '" + m + "' is not valid for " + to_string(experiment));
    }
    if (d < 1) fail("d must be >= 1");
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) fail("kappa must be >= 1");
    if (!(L > 0.0) || !std::isfinite(L)) fail("L must be positive");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail("noise_std must be >= 0");
    if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) fail("alpha must be positive");
    if (mu && !(*mu >= 0.0 && *mu < 1.0)) fail("mu must lie in [0, 1)");
    if (!(c > 0.0 && c <= 1.0)) fail("c must lie in (0, 1]");
    if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
    if (steps < 0) fail("steps must be >= 0");
    if (seeds.empty()) fail("seeds must not be empty");
    if (record_every < 1) fail("record_every must be >= 1");
    if (threads < 0) fail("threads must be >= 0");
    if (lqr.n_traj < 1) fail("lqr.n_traj must be >= 1");
    if (lqr.iterations < 0) fail("lqr.iterations must be >= 0");
    if (lqr.filter_factor && !(*lqr.filter_factor > 0.0))
      fail("lqr.filter_factor must be positive or null");
    if (lqr.state_dim < 1 || lqr.action_dim < 1 || lqr.horizon < 1)
      fail("lqr dimensions must be >= 1");
    if (experiment == Experiment::noise_propagation && steps < 51)
      fail("noise-propagation needs steps > 50");
  }
};

inline std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t k = 0; k < n; ++k) s[k] = k;
  return s;
}

inline ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.methods = known_methods(e);
  switch (e) {
    case Experiment::noise_propagation:
      c.d = 1;
      c.alpha = 0.1;
      c.steps = 10000;
      c.seeds = {0};
      break;
    case Experiment::quadratic:
      c.methods = {"sgd", "hb", "igt", "hb-igt"};
      c.mu = 0.9;
      c.seeds = seed_range(20);
      c.record_every = 10;
      break;
    case Experiment::lqr:
      c.alpha = 2e-4;
      c.c = 0.5;
      c.seeds = seed_range(3);
      break;
    case Experiment::hb_rate:
      c.d = 50;
      c.kappa = 100.0;
      c.noise_std = 0.0;
      c.steps = 400;
      c.seeds = {0};
      break;
    case Experiment::spectral_sweep:
      c.d = 10;
      c.kappa = 100.0;
      c.seeds = seed_range(100);
      c.record_every = 10;
      break;
  }
  return c;
}

namespace detail {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw config_error("config key '" + key + "' has the wrong type");
  }
}

inline std::optional<double> get_optional_number(const json& j,
                                                 const std::string& key) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) throw config_error("config key '" + key + "' must be a number or null");
  return j.get<double>();
}

}  // namespace detail

/// Overlays the keys of `j` on `base`. Unknown keys are rejected.
inline ExperimentConfig apply_json(ExperimentConfig base, const json& j) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  using detail::get_as;
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      const Experiment e = parse_experiment(get_as<std::string>(value, key));
      if (e != base.experiment)
        throw config_error("config is for '" + to_string(e) +
                           "' but the command is '" + to_string(base.experiment) + "'");
    } else if (key == "methods") {
      base.methods = get_as<std::vector<std::string>>(value, key);
    } else if (key == "d") {
      base.d = get_as<int>(value, key);
    } else if (key == "kappa") {
      base.kappa = get_as<double>(value, key);
    } else if (key == "L") {
      base.L = get_as<double>(value, key);
    } else if (key == "noise_std") {
      base.noise_std = get_as<double>(value, key);
    } else if (key == "alpha") {
      base.alpha = detail::get_optional_number(value, key);
    } else if (key == "mu") {
      base.mu = detail::get_optional_number(value, key);
    } else if (key == "c") {
      base.c = get_as<double>(value, key);
    } else if (key == "adam_eps") {
      base.adam_eps = get_as<double>(value, key);
    } else if (key == "steps") {
      base.steps = get_as<int>(value, key);
    } else if (key == "seeds") {
      base.seeds = get_as<std::vector<std::uint64_t>>(value, key);
    } else if (key == "problem_seed") {
      base.problem_seed = get_as<std::uint64_t>(value, key);
    } else if (key == "output_dir") {
      base.output_dir = get_as<std::string>(value, key);
    } else if (key == "record_every") {
      base.record_every = get_as<int>(value, key);
    } else if (key == "threads") {
      base.threads = get_as<int>(value, key);
    } else if (key == "lqr") {
      if (!value.is_object()) throw config_error("config key 'lqr' must be an object");
      for (const auto& [lk, lv] : value.items()) {
        const std::string full = "lqr." + lk;
        if (lk == "n_traj") base.lqr.n_traj = get_as<int>(lv, full);
        else if (lk == "iterations") base.lqr.iterations = get_as<int>(lv, full);
        else if (lk == "filter_factor") base.lqr.filter_factor = detail::get_optional_number(lv, full);
        else if (lk == "state_dim") base.lqr.state_dim = get_as<int>(lv, full);
        else if (lk == "action_dim") base.lqr.action_dim = get_as<int>(lv, full);
        else if (lk == "horizon") base.lqr.horizon = get_as<int>(lv, full);
        else throw config_error("unknown config key '" + full + "'");
      }
    } else {
      throw config_error("unknown config key '" + key + "'");
    }
  }
  return base;
}

inline json to_json(const ExperimentConfig& c) {
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json j;
  j["experiment"] = to_string(c.experiment);
  j["methods"] = c.methods;
  j["d"] = c.d;
  j["kappa"] = c.kappa;
  j["L"] = c.L;
  j["noise_std"] = c.noise_std;
  j["alpha"] = opt(c.alpha);
  j["mu"] = opt(c.mu);
  j["c"] = c.c;
  j["adam_eps"] = c.adam_eps;
  j["steps"] = c.steps;
  j["seeds"] = c.seeds;
  j["problem_seed"] = c.problem_seed;
  j["output_dir"] = c.output_dir;
  j["record_every"] = c.record_every;
  j["threads"] = c.threads;
  j["lqr"] = {{"n_traj", c.lqr.n_traj},
              {"iterations", c.lqr.iterations},
              {"filter_factor", opt(c.lqr.filter_factor)},
              {"state_dim", c.lqr.state_dim},
              {"action_dim", c.lqr.action_dim},
              {"horizon", c.lqr.horizon}};
  return j;
}

}  // namespace igt::runner

#endif  // IGT_RUNNER_CONFIG_HPP
