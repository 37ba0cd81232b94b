#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "igt/runner/experiments.hpp"

namespace {

using igt::runner::ExperimentConfig;
using igt::runner::json;

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw igt::runner::config_error("cannot read config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw igt::runner::config_error("malformed config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit gradient transport experiments"};
  app.require_subcommand(1, 1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps, threads, iterations, n_traj;
  std::optional<double> alpha, mu, c;

  for (const std::string name :
       {"noise-propagation", "quadratic", "lqr", "hb-rate", "spectral-sweep"}) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "run a single seed");
    sub->add_option("--steps", steps, "number of optimizer steps");
    sub->add_option("--alpha", alpha, "stepsize");
    sub->add_option("--mu", mu, "heavy-ball momentum");
    sub->add_option("--c", c, "tail fraction for ITA");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (0: all cores)");
    sub->add_option("--iterations", iterations, "LQR training iterations");
    sub->add_option("--n-traj", n_traj, "LQR rollouts per gradient");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    ExperimentConfig cfg =
        igt::runner::default_config(igt::runner::parse_experiment(name));
    if (!config_path.empty()) cfg = igt::runner::apply_json(cfg, load_json(config_path));
    if (seed) cfg.seeds = {*seed};
    if (steps) cfg.steps = *steps;
    if (alpha) cfg.alpha = *alpha;
    if (mu) cfg.mu = *mu;
    if (c) cfg.c = *c;
    if (threads) cfg.threads = *threads;
    if (iterations) cfg.lqr.iterations = *iterations;
    if (n_traj) cfg.lqr.n_traj = *n_traj;

    std::string dir = out;
    if (dir.empty()) dir = cfg.output_dir;
    if (dir.empty())
      if (const char* env = std::getenv("IGT_OUT")) dir = env;
    if (dir.empty()) dir = "igt_out/" + name;
    cfg.validate();

    const json summary = igt::runner::run_experiment(cfg, dir);
    for (const json& p : summary["properties"])
      std::cout << (p["pass"].get<bool>() ? "PASS " : "FAIL ")
                << p["name"].get<std::string>() << " = " << p["value"].dump() << '\n';
    std::cout << "wrote " << dir << '\n';
    return 0;
  } catch (const igt::runner::config_error& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
