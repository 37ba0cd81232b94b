#ifndef IGT_RUNNER_EXPERIMENTS_HPP
#define IGT_RUNNER_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "igt/analysis.hpp"
#include "igt/dynamics.hpp"
#include "igt/estimator.hpp"
#include "igt/lqr.hpp"
#include "igt/noise_propagation.hpp"
#include "igt/optimizer.hpp"
#include "igt/quadratic.hpp"
#include "igt/rng.hpp"
#include "igt/runner/config.hpp"
#include "igt/runner/csv.hpp"

namespace igt::runner {

/// 50 significant decimal digits; used where double rounding would swamp the
/// signal (noiseless linear-rate measurements far below 1e-16).
using HighPrecision = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<50>, boost::multiprecision::et_off>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs fn(0) .. fn(n-1) on up to `threads` workers (0: hardware
/// concurrency). The first exception is rethrown after all workers finish.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? std::size_t(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// noise propagation

struct NoisePropagationTable {
  std::string method;
  std::vector<double> n_sq_i1, n_sq_i25, n_sq_i50, total;  // index t = 0..T
};

inline ImpulseMethod parse_impulse_method(const std::string& name) {
  if (name == "sgd") return ImpulseMethod::sgd();
  if (name == "momentum-inc") return ImpulseMethod::momentum_increasing();
  if (name == "igt") return ImpulseMethod::igt();
  const std::string prefix = "momentum-";
  if (name.rfind(prefix, 0) == 0)
    return ImpulseMethod::momentum_fixed(std::stod(name.substr(prefix.size())));
  throw config_error("unknown noise-propagation method '" + name + "'");
}

inline NoisePropagationTable noise_propagation_table(const std::string& method,
                                                     double alpha, double h,
                                                     std::size_t T) {
  const ImpulseMethod m = parse_impulse_method(method);
  NoisePropagationTable tab;
  tab.method = method;
  auto squared = [](std::vector<double> v) {
    for (double& x : v) x *= x;
    return v;
  };
  tab.n_sq_i1 = squared(impulse_response(m, alpha, h, 1, T));
  tab.n_sq_i25 = squared(impulse_response(m, alpha, h, 25, T));
  tab.n_sq_i50 = squared(impulse_response(m, alpha, h, 50, T));
  tab.total = total_noise_variance(m, alpha, h, T);
  return tab;
}

// ---------------------------------------------------------------------------
// quadratic

inline OptimizerConfig quadratic_method(const std::string& name, double alpha,
                                        double mu, double c, double adam_eps) {
  if (name == "sgd") return OptimizerConfig::sgd(alpha);
  if (name == "hb") return OptimizerConfig::heavy_ball(alpha, mu);
  if (name == "igt") return OptimizerConfig::sgd(alpha).with_estimator(EstimatorConfig::igt());
  if (name == "hb-igt") return OptimizerConfig::heavy_ball_igt(alpha, mu);
  if (name == "ita") return OptimizerConfig::sgd(alpha).with_estimator(EstimatorConfig::ita(c));
  if (name == "hb-ita")
    return OptimizerConfig::heavy_ball(alpha, mu).with_estimator(EstimatorConfig::ita(c));
  if (name == "adam") return OptimizerConfig::adam(alpha, adam_eps);
  if (name == "adam-ita") return OptimizerConfig::adam_ita(alpha, c, adam_eps);
  throw config_error("unknown quadratic method '" + name + "'");
}

/// One optimizer run from theta_0 = 0. Row t describes iterate theta_t and
/// the estimate v_t formed there; the raw-sample columns use an independent
/// noise stream so they never perturb the trajectory.
inline RunRecord run_quadratic(const QuadraticProblem& p,
                               const OptimizerConfig& method,
                               std::uint64_t seed, int steps,
                               int record_every = 1) {
  Optimizer<double> opt(method);
  QuadraticOracle<double> oracle(p, seed);
  oracle.set_recording(false);
  Rng raw_rng = make_rng({seed, 0x726177});
  ParamVector theta = ParamVector::Zero(p.dim());
  RunRecord rec;
  for (int t = 0; t < steps; ++t) {
    ParamVector next = opt.step(theta, oracle);
    const ParamVector raw_noise = draw_noise(p, raw_rng);
    if (t % record_every == 0) {
      const ParamVector g = true_gradient(p, theta);
      const ParamVector& v = opt.estimator().velocity();
      const ParamVector raw = g + raw_noise;
      RunRow row;
      row.t = std::uint64_t(t);
      row.error_sq = (theta - p.theta_star).squaredNorm();
      row.est_noise_sq = (v - g).squaredNorm();
      row.est_norm = v.norm();
      row.cosine = cosine_similarity(v, g).value;
      row.raw_noise_sq = raw_noise.squaredNorm();
      row.raw_cosine = cosine_similarity(raw, g).value;
      rec.rows.push_back(row);
    }
    theta = std::move(next);
  }
  return rec;
}

struct CosineComparison {
  std::vector<Bin> estimator;  // cos(v_t, g(theta_t))
  std::vector<Bin> raw;        // cos(raw sample, g(theta_t))
  std::size_t populated = 0;
  bool estimator_wins_everywhere = false;
};

/// Bins every row with t > t_min by distance |theta_t - theta*| on a
/// logarithmic grid over the observed range and compares mean cosines.
inline CosineComparison compare_binned_cosine(const std::vector<RunRecord>& runs,
                                              std::uint64_t t_min,
                                              std::size_t n_bins = 20,
                                              std::size_t min_count = 30) {
  std::vector<double> dist, est, raw;
  for (const RunRecord& r : runs)
    for (const RunRow& row : r.rows)
      if (row.t > t_min) {
        dist.push_back(std::sqrt(row.error_sq));
        est.push_back(row.cosine);
        raw.push_back(row.raw_cosine);
      }
  CosineComparison cmp;
  if (dist.empty()) return cmp;
  const auto [lo, hi] = std::minmax_element(dist.begin(), dist.end());
  const double top = *hi * (1.0 + 1e-12);
  cmp.estimator = log_binned_means(dist, est, *lo, top, n_bins, min_count);
  cmp.raw = log_binned_means(dist, raw, *lo, top, n_bins, min_count);
  cmp.estimator_wins_everywhere = true;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (cmp.estimator[b].count < min_count) continue;
    ++cmp.populated;
    if (!(cmp.estimator[b].mean > cmp.raw[b].mean))
      cmp.estimator_wins_everywhere = false;
  }
  if (cmp.populated == 0) cmp.estimator_wins_everywhere = false;
  return cmp;
}

/// Series helpers over an aggregate.
inline std::vector<double> agg_t(const SeedAggregate& a) {
  std::vector<double> t;
  for (std::uint64_t x : a.t) t.push_back(double(x));
  return t;
}

template <typename Field>
std::vector<double> agg_mean(const SeedAggregate& a, Field field) {
  std::vector<double> y;
  for (const RunRow& r : a.mean) y.push_back(r.*field);
  return y;
}

/// Value of y at roughly log-spaced checkpoints in [t_from, t_to]; true when
/// strictly decreasing across them.
inline bool decreasing_on_log_grid(const std::vector<double>& t,
                                   const std::vector<double>& y, double t_from,
                                   double t_to, int n_points) {
  std::vector<double> picked;
  for (int k = 0; k < n_points; ++k) {
    const double target =
        t_from * std::pow(t_to / t_from, double(k) / double(n_points - 1));
    std::size_t best = 0;
    for (std::size_t j = 1; j < t.size(); ++j)
      if (std::abs(t[j] - target) < std::abs(t[best] - target)) best = j;
    picked.push_back(y[best]);
  }
  for (std::size_t k = 1; k < picked.size(); ++k)
    if (!(picked[k] < picked[k - 1])) return false;
  return true;
}

/// Mean of y over rows with t in [t_from, t_to].
inline double window_mean(const std::vector<double>& t,
                          const std::vector<double>& y, double t_from,
                          double t_to) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= t_from && t[k] <= t_to) {
      s += y[k];
      ++n;
    }
  return n ? s / double(n) : kNaN;
}

// ---------------------------------------------------------------------------
// heavy-ball rate

/// |theta_t - theta*| for t = 0..steps of a noiseless run carried out in
/// HighPrecision.
inline std::vector<double> run_noiseless_distance(const QuadraticProblem& p,
                                                  const OptimizerConfig& method,
                                                  int steps) {
  using V = Vector<HighPrecision>;
  Optimizer<HighPrecision> opt(method);
  const V star = p.theta_star.cast<HighPrecision>();
  auto oracle = [&](const V& point) { return true_gradient<HighPrecision>(p, point); };
  V theta = V::Zero(p.dim());
  std::vector<double> dist;
  dist.reserve(std::size_t(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    dist.push_back(static_cast<double>((theta - star).norm()));
    if (t < steps) theta = opt.step(theta, oracle);
  }
  return dist;
}

/// Geometric mean of dist[t] / dist[t-1] over t in (t0, t1].
inline double contraction_factor(const std::vector<double>& dist, std::size_t t0,
                                 std::size_t t1) {
  if (t1 >= dist.size() || t0 >= t1)
    throw std::invalid_argument("contraction_factor: bad window");
  if (!(dist[t0] > 0.0 && dist[t1] > 0.0)) return kNaN;
  return std::pow(dist[t1] / dist[t0], 1.0 / double(t1 - t0));
}

// ---------------------------------------------------------------------------
// stability sweep + Heavyball-IGT at the selected momentum

struct HbIgtVarianceRun {
  std::vector<double> t;
  std::vector<double> mean_error_sq;       // noiseless trajectory = E[theta_t]
  std::vector<double> seed_mean_error_sq;  // |mean over seeds - theta*|^2
  std::vector<double> variance;            // sum over coordinates of sample var
};

inline HbIgtVarianceRun run_hb_igt_variance(const QuadraticProblem& p,
                                            double alpha, double mu,
                                            const std::vector<std::uint64_t>& seeds,
                                            int steps, int record_every,
                                            int threads) {
  const OptimizerConfig method = OptimizerConfig::heavy_ball_igt(alpha, mu);
  const std::size_t n_rec = std::size_t((steps + record_every - 1) / record_every);
  // Per seed, recorded iterates.
  std::vector<std::vector<ParamVector>> iterates(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t s) {
    Optimizer<double> opt(method);
    QuadraticOracle<double> oracle(p, seeds[s]);
    oracle.set_recording(false);
    ParamVector theta = ParamVector::Zero(p.dim());
    iterates[s].reserve(n_rec);
    for (int t = 0; t < steps; ++t) {
      if (t % record_every == 0) iterates[s].push_back(theta);
      theta = opt.step(theta, oracle);
    }
  });

  HbIgtVarianceRun out;
  Optimizer<double> clean(method);
  auto exact = [&](const ParamVector& x) { return true_gradient(p, x); };
  ParamVector theta = ParamVector::Zero(p.dim());
  const double n = double(seeds.size());
  for (int t = 0, k = 0; t < steps; ++t) {
    if (t % record_every == 0) {
      ParamVector mean = ParamVector::Zero(p.dim());
      for (const auto& it : iterates) mean += it[std::size_t(k)] / n;
      double var = 0.0;
      if (seeds.size() > 1)
        for (const auto& it : iterates)
          var += (it[std::size_t(k)] - mean).squaredNorm() / (n - 1.0);
      out.t.push_back(double(t));
      out.mean_error_sq.push_back((theta - p.theta_star).squaredNorm());
      out.seed_mean_error_sq.push_back((mean - p.theta_star).squaredNorm());
      out.variance.push_back(var);
      ++k;
    }
    theta = clean.step(theta, exact);
  }
  return out;
}

/// Log-linear fit of the noiseless mean error over the steps where it is
/// still above floor_ratio times its initial value.
inline LinearFit mean_error_log_fit(const HbIgtVarianceRun& run,
                                    double floor_ratio = 1e-20) {
  std::vector<double> x, y;
  if (run.mean_error_sq.empty()) throw std::invalid_argument("empty run");
  const double floor = run.mean_error_sq.front() * floor_ratio;
  for (std::size_t k = 0; k < run.t.size(); ++k) {
    if (!(run.mean_error_sq[k] > floor)) break;
    x.push_back(run.t[k]);
    y.push_back(std::log(run.mean_error_sq[k]));
  }
  return least_squares(x, y);
}

// ---------------------------------------------------------------------------
// LQR

struct LqrRun {
  std::vector<double> eval_cost;   // exact expected cost of K_t, t = 0..T
  std::vector<double> train_cost;  // mean rollout cost at the query gain
  std::vector<int> kept;
  lqr::LinearPolicy final_gain;
  bool diverged = false;
};

namespace detail {
inline ParamVector flatten(const lqr::Matrix& k) {
  return Eigen::Map<const ParamVector>(k.data(), k.size());
}
inline lqr::Matrix unflatten(const ParamVector& v, Eigen::Index rows,
                             Eigen::Index cols) {
  return Eigen::Map<const lqr::Matrix>(v.data(), rows, cols);
}
}  // namespace detail

/// Trains the time-invariant gain from K = 0 with gd (exact gradient), sgd
/// (REINFORCE) or ita (REINFORCE through the tail-averaged transported
/// estimator). Iteration t draws rollouts from derive_seed({seed, t}).
inline LqrRun train_lqr(const lqr::LqrSystem& sys, const std::string& method,
                        double alpha, double c, int iterations, int n_traj,
                        std::uint64_t seed,
                        const lqr::ReinforceOptions& opts = {}) {
  const Eigen::Index m = sys.action_dim(), n = sys.state_dim();
  LqrRun run;
  lqr::LinearPolicy K = lqr::LinearPolicy::Zero(m, n);

  std::optional<Optimizer<double>> opt;
  if (method == "sgd") {
    opt.emplace(OptimizerConfig::sgd(alpha));
  } else if (method == "ita") {
    opt.emplace(OptimizerConfig::sgd(alpha).with_estimator(EstimatorConfig::ita(c)));
  } else if (method != "gd") {
    throw config_error("unknown lqr method '" + method + "'");
  }

  for (int t = 0; t < iterations; ++t) {
    run.eval_cost.push_back(lqr::exact_expected_cost(sys, K));
    if (!std::isfinite(run.eval_cost.back())) {
      run.diverged = true;
      break;
    }
    if (method == "gd") {
      K -= alpha * lqr::analytic_cost_gradient(sys, K);
      run.train_cost.push_back(kNaN);
      run.kept.push_back(0);
      continue;
    }
    const std::uint64_t stream = derive_seed({seed, std::uint64_t(t)});
    double train = kNaN;
    int kept = 0;
    auto oracle = [&](const ParamVector& point) {
      const lqr::ReinforceEstimate est = lqr::reinforce_gradient(
          sys, detail::unflatten(point, m, n), n_traj, stream, opts);
      train = est.mean_cost;
      kept = est.kept;
      return detail::flatten(est.gradient);
    };
    try {
      K = detail::unflatten(opt->step(detail::flatten(K), oracle), m, n);
    } catch (const std::domain_error&) {
      run.diverged = true;
      break;
    }
    run.train_cost.push_back(train);
    run.kept.push_back(kept);
  }
  if (!run.diverged) {
    run.eval_cost.push_back(lqr::exact_expected_cost(sys, K));
    run.train_cost.push_back(kNaN);
    run.kept.push_back(0);
  }
  const std::size_t full = std::size_t(iterations) + 1;
  while (run.eval_cost.size() < full) {
    run.eval_cost.push_back(std::numeric_limits<double>::infinity());
    run.train_cost.push_back(kNaN);
    run.kept.push_back(0);
  }
  while (run.train_cost.size() < full) {
    run.train_cost.push_back(kNaN);
    run.kept.push_back(0);
  }
  run.final_gain = K;
  return run;
}

/// Variance of the first differences of the eval-cost curve over its last
/// half.
inline double late_difference_variance(const std::vector<double>& cost) {
  const std::size_t start = cost.size() / 2;
  std::vector<double> d;
  for (std::size_t k = start + 1; k < cost.size(); ++k) d.push_back(cost[k] - cost[k - 1]);
  if (d.size() < 2) return kNaN;
  double mean = 0.0;
  for (double x : d) mean += x / double(d.size());
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean) / double(d.size() - 1);
  return var;
}

// ---------------------------------------------------------------------------
// driver

inline json property(const std::string& name, double value, bool pass) {
  json j;
  j["name"] = name;
  j["value"] = std::isfinite(value) ? json(value) : json(nullptr);
  j["pass"] = pass;
  return j;
}

inline std::string seed_file(const std::string& prefix, const std::string& method,
                             std::uint64_t seed) {
  return prefix + "_" + method + "_seed" + std::to_string(seed) + ".csv";
}

inline json run_noise_propagation_experiment(const ExperimentConfig& cfg,
                                             const std::filesystem::path& dir) {
  const double alpha = cfg.alpha.value_or(1.0 / cfg.L);
  const std::size_t T = std::size_t(cfg.steps);
  std::vector<NoisePropagationTable> tables(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t k) {
    tables[k] = noise_propagation_table(cfg.methods[k], alpha, cfg.L, T);
    CsvWriter w(dir / ("noise_propagation_" + cfg.methods[k] + ".csv"),
                {"t", "N2_i1", "N2_i25", "N2_i50", "total"});
    for (std::size_t t = 0; t <= T; ++t)
      w.row(t, {tables[k].n_sq_i1[t], tables[k].n_sq_i25[t], tables[k].n_sq_i50[t],
                tables[k].total[t]});
    w.close();
  });

  std::vector<std::string> header{"t"};
  for (const auto& m : cfg.methods) header.push_back("total_" + m);
  CsvWriter agg(dir / "noise_propagation_aggregate.csv", header);
  for (std::size_t t = 0; t <= T; ++t) {
    std::vector<double> row;
    for (const auto& tab : tables) row.push_back(tab.total[t]);
    agg.row(t, row);
  }
  agg.close();

  json props = json::array();
  std::vector<double> ts;
  for (std::size_t t = 0; t <= T; ++t) ts.push_back(double(t));
  for (const auto& tab : tables) {
    if (tab.method == "igt" && T >= 1000) {
      const double slope = loglog_slope(ts, tab.total, 100.0, double(T));
      props.push_back(property("igt_total_loglog_slope", slope,
                               std::abs(slope + 1.0) <= 0.15));
    } else if (tab.method.rfind("momentum-", 0) == 0 && tab.method != "momentum-inc") {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t t = std::min<std::size_t>(500, T / 2); t <= std::min<std::size_t>(1000, T); ++t) lo = std::min(lo, tab.total[t]);
      props.push_back(property(tab.method + "_total_min_late", lo, lo > 0.0));
    }
  }
  json s;
  s["properties"] = props;
  return s;
}

inline json run_quadratic_experiment(const ExperimentConfig& cfg,
                                     const std::filesystem::path& dir) {
  const QuadraticProblem p =
      make_quadratic(cfg.d, cfg.kappa, cfg.L, cfg.noise_std, cfg.problem_seed);
  const double alpha = cfg.alpha.value_or(1.0 / cfg.L);
  const double mu = cfg.mu.value_or(0.9);
  const std::size_t n_methods = cfg.methods.size(), n_seeds = cfg.seeds.size();
  std::vector<std::vector<RunRecord>> records(n_methods,
                                              std::vector<RunRecord>(n_seeds));
  const std::vector<std::string> header{"t",      "error_sq",     "est_noise_sq",
                                        "est_norm", "cosine",     "raw_noise_sq",
                                        "raw_cosine"};
  parallel_for(n_methods * n_seeds, cfg.threads, [&](std::size_t job) {
    const std::size_t mi = job / n_seeds, si = job % n_seeds;
    const OptimizerConfig oc =
        quadratic_method(cfg.methods[mi], alpha, mu, cfg.c, cfg.adam_eps);
    RunRecord rec = run_quadratic(p, oc, cfg.seeds[si], cfg.steps, cfg.record_every);
    CsvWriter w(dir / seed_file("quadratic", cfg.methods[mi], cfg.seeds[si]), header);
    for (const RunRow& r : rec.rows)
      w.row(r.t, {r.error_sq, r.est_noise_sq, r.est_norm, r.cosine, r.raw_noise_sq,
                  r.raw_cosine});
    w.close();
    records[mi][si] = std::move(rec);
  });

  json props = json::array();
  std::optional<double> igt_final, igt_noise_slope;
  const double T = double(cfg.steps);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    const std::string& m = cfg.methods[mi];
    CsvWriter w(dir / ("quadratic_" + m + "_aggregate.csv"),
                {"t", "error_sq_mean", "error_sq_std", "est_noise_sq_mean",
                 "est_noise_sq_std", "cosine_mean", "raw_cosine_mean"});
    if (cfg.steps == 0) {
      w.close();
      continue;
    }
    const SeedAggregate agg = seed_aggregate(records[mi]);
    for (std::size_t k = 0; k < agg.t.size(); ++k)
      w.row(agg.t[k], {agg.mean[k].error_sq, agg.stddev[k].error_sq,
                       agg.mean[k].est_noise_sq, agg.stddev[k].est_noise_sq,
                       agg.mean[k].cosine, agg.mean[k].raw_cosine});
    w.close();

    const std::vector<double> ts = agg_t(agg);
    const std::vector<double> noise = agg_mean(agg, &RunRow::est_noise_sq);
    const std::vector<double> err = agg_mean(agg, &RunRow::error_sq);
    if (T >= 1e3) {
      const double slope = loglog_slope(ts, noise, 1e2, T);
      if (m == "sgd")
        props.push_back(property("sgd_noise_slope", slope, std::abs(slope) <= 0.05));
      if (m == "igt") {
        igt_noise_slope = slope;
        props.push_back(property("igt_noise_slope", slope, std::abs(slope + 1.0) <= 0.15));
      }
    }
    if (m == "igt") {
      igt_final = err.back();
      const double t_from = std::min(2.0 * cfg.kappa, T / 4.0);
      const bool mono = decreasing_on_log_grid(ts, err, std::max(t_from, 1.0),
                                               ts.back(), 10);
      props.push_back(property("igt_error_decreasing_after_transient", err.back(), mono));
      const CosineComparison cmp = compare_binned_cosine(records[mi], 100);
      props.push_back(property("igt_cosine_beats_raw_in_populated_bins",
                               double(cmp.populated), cmp.estimator_wins_everywhere));
    }
  }
  if (igt_final) {
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const std::string& m = cfg.methods[mi];
      if (m != "sgd" && m != "hb") continue;
      const SeedAggregate agg = seed_aggregate(records[mi]);
      const std::vector<double> ts = agg_t(agg);
      const double floor =
          window_mean(ts, agg_mean(agg, &RunRow::error_sq), 0.9 * ts.back(), ts.back());
      const double mid = window_mean(ts, agg_mean(agg, &RunRow::error_sq), 0.5 * ts.back(),
                                     0.6 * ts.back());
      props.push_back(property(m + "_plateau_drift", floor / mid - 1.0,
                               std::abs(floor / mid - 1.0) <= 0.25));
      props.push_back(property(m + "_floor_over_igt_final", floor / *igt_final,
                               floor >= 10.0 * *igt_final));
    }
  }
  json s;
  s["properties"] = props;
  return s;
}

inline json run_lqr_experiment(const ExperimentConfig& cfg,
                               const std::filesystem::path& dir) {
  const double alpha = cfg.alpha.value_or(2e-4);
  lqr::ReinforceOptions opts;
  opts.filter_factor = cfg.lqr.filter_factor;
  const std::size_t n_methods = cfg.methods.size(), n_seeds = cfg.seeds.size();
  std::vector<lqr::LqrSystem> systems(n_seeds);
  std::vector<lqr::RiccatiSolution> optimal(n_seeds);
  for (std::size_t si = 0; si < n_seeds; ++si) {
    systems[si] = lqr::make_lqr(cfg.seeds[si], cfg.lqr.state_dim, cfg.lqr.action_dim,
                                cfg.lqr.horizon);
    optimal[si] = lqr::riccati_optimal(systems[si]);
  }
  std::vector<std::vector<LqrRun>> runs(n_methods, std::vector<LqrRun>(n_seeds));
  parallel_for(n_methods * n_seeds, cfg.threads, [&](std::size_t job) {
    const std::size_t mi = job / n_seeds, si = job % n_seeds;
    LqrRun run = train_lqr(systems[si], cfg.methods[mi], alpha, cfg.c,
                           cfg.lqr.iterations, cfg.lqr.n_traj, cfg.seeds[si], opts);
    CsvWriter w(dir / seed_file("lqr", cfg.methods[mi], cfg.seeds[si]),
                {"t", "eval_cost", "train_cost", "kept", "optimal_cost"});
    for (std::size_t t = 0; t < run.eval_cost.size(); ++t)
      w.row(t, {run.eval_cost[t], run.train_cost[t], double(run.kept[t]),
                optimal[si].stochastic_cost});
    w.close();
    runs[mi][si] = std::move(run);
  });

  json props = json::array();
  json finals = json::object();
  std::vector<double> final_mean(n_methods, 0.0), smooth(n_methods, 0.0);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    CsvWriter w(dir / ("lqr_" + cfg.methods[mi] + "_aggregate.csv"),
                {"t", "eval_cost_mean", "eval_cost_std"});
    const std::size_t T = std::size_t(cfg.lqr.iterations) + 1;
    for (std::size_t t = 0; t < T; ++t) {
      double mean = 0.0, var = 0.0;
      for (const LqrRun& r : runs[mi]) mean += r.eval_cost[t] / double(n_seeds);
      if (n_seeds > 1)
        for (const LqrRun& r : runs[mi])
          var += (r.eval_cost[t] - mean) * (r.eval_cost[t] - mean) / double(n_seeds - 1);
      w.row(t, {mean, std::sqrt(var)});
      if (t + 1 == T) final_mean[mi] = mean;
    }
    w.close();
    for (const LqrRun& r : runs[mi])
      smooth[mi] += late_difference_variance(r.eval_cost) / double(n_seeds);
    finals[cfg.methods[mi]] = final_mean[mi];
  }
  double opt_mean = 0.0, opt_det = 0.0;
  for (const auto& o : optimal) {
    opt_mean += o.stochastic_cost / double(n_seeds);
    opt_det += o.deterministic_cost / double(n_seeds);
  }
  auto idx = [&](const std::string& m) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < n_methods; ++k)
      if (cfg.methods[k] == m) return k;
    return std::nullopt;
  };
  const auto gd = idx("gd"), sgd = idx("sgd"), ita = idx("ita");
  if (gd && ita && sgd) {
    const double g = final_mean[*gd], i = final_mean[*ita], s = final_mean[*sgd];
    props.push_back(property("gd_le_ita_lt_sgd", i, g <= i && i < s));
    props.push_back(property("ita_gain_over_sgd", (s - i) / s, i <= 0.95 * s));
  }
  if (ita && sgd)
    props.push_back(property("ita_smoother_than_sgd", smooth[*ita] / smooth[*sgd],
                             smooth[*ita] < smooth[*sgd]));
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    bool dominated = true;
    for (std::size_t si = 0; si < n_seeds; ++si)
      for (double c : runs[mi][si].eval_cost)
        dominated = dominated && c >= optimal[si].stochastic_cost;
    props.push_back(property(cfg.methods[mi] + "_above_riccati_optimum", 0.0, dominated));
  }
  json s;
  s["final_eval_cost"] = finals;
  s["riccati_optimal_cost"] = opt_mean;
  s["riccati_deterministic_cost"] = opt_det;
  s["properties"] = props;
  return s;
}

inline json run_hb_rate_experiment(const ExperimentConfig& cfg,
                                   const std::filesystem::path& dir) {
  const QuadraticProblem p = make_quadratic(cfg.d, cfg.kappa, cfg.L, 0.0, cfg.problem_seed);
  const HeavyBallTuning tune = optimal_hb_tuning(cfg.L, cfg.kappa);
  const double alpha = cfg.alpha.value_or(tune.alpha);
  const double mu = cfg.mu.value_or(tune.mu);
  const double target = (std::sqrt(cfg.kappa) - 1.0) / (std::sqrt(cfg.kappa) + 1.0);
  std::vector<std::vector<double>> dist(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t k) {
    const OptimizerConfig oc = cfg.methods[k] == "hb"
                                   ? OptimizerConfig::heavy_ball(alpha, mu)
                                   : OptimizerConfig::heavy_ball_igt(alpha, mu);
    dist[k] = run_noiseless_distance(p, oc, cfg.steps);
    CsvWriter w(dir / ("hb_rate_" + cfg.methods[k] + ".csv"), {"t", "distance"});
    for (std::size_t t = 0; t < dist[k].size(); ++t) w.row(t, {dist[k][t]});
    w.close();
  });
  json props = json::array();
  const std::size_t T = std::size_t(cfg.steps);
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    if (T < 4) break;
    const double f = contraction_factor(dist[k], T / 2, T);
    props.push_back(property(cfg.methods[k] + "_contraction_factor", f,
                             std::abs(f - target) <= 0.02 * target));
  }
  json s;
  s["alpha"] = alpha;
  s["mu"] = mu;
  s["target_rate"] = target;
  s["properties"] = props;
  return s;
}

inline json run_spectral_sweep_experiment(const ExperimentConfig& cfg,
                                          const std::filesystem::path& dir) {
  const QuadraticProblem p =
      make_quadratic(cfg.d, cfg.kappa, cfg.L, cfg.noise_std, cfg.problem_seed);
  const double alpha = cfg.alpha.value_or(1.0 / (2.0 * cfg.L));
  const std::vector<MomentumSweepPoint> sweep =
      momentum_sweep(alpha, p.eigs, default_momentum_grid());
  {
    CsvWriter w(dir / "spectral_sweep.csv",
                {"mu", "max_rho_bias", "max_rho_variance", "stable"});
    for (const auto& pt : sweep)
      w.row({pt.mu, pt.max_rho_bias, pt.max_rho_variance, pt.stable() ? 1.0 : 0.0});
    w.close();
  }
  std::optional<double> mu = cfg.mu;
  if (!mu) {
    const auto best = find_stable_momentum(alpha, p.eigs);
    if (best) mu = best->mu;
  }
  json props = json::array();
  json s;
  s["alpha"] = alpha;
  if (!mu) {
    props.push_back(property("stable_momentum_found", kNaN, false));
    s["properties"] = props;
    return s;
  }
  s["mu"] = *mu;
  props.push_back(property("stable_momentum_found", *mu, *mu > 0.0));
  const HbIgtVarianceRun run =
      run_hb_igt_variance(p, alpha, *mu, cfg.seeds, cfg.steps, cfg.record_every, cfg.threads);
  CsvWriter w(dir / "spectral_sweep_run.csv",
              {"t", "mean_error_sq", "seed_mean_error_sq", "variance"});
  for (std::size_t k = 0; k < run.t.size(); ++k)
    w.row(std::uint64_t(run.t[k]),
          {run.mean_error_sq[k], run.seed_mean_error_sq[k], run.variance[k]});
  w.close();
  if (run.t.size() >= 10) {
    const LinearFit fit = mean_error_log_fit(run);
    props.push_back(property("mean_error_log_linear_r2", fit.r_squared,
                             fit.r_squared > 0.99));
    if (cfg.steps >= 1000) {
      const double slope =
          loglog_slope(run.t, run.variance, double(cfg.steps) / 10.0, double(cfg.steps));
      props.push_back(property("variance_loglog_slope", slope, std::abs(slope + 1.0) <= 0.2));
    }
  }
  s["properties"] = props;
  return s;
}

/// Writes every CSV, the echoed config and summary.json into `dir`.
/// Returns the summary; "all_pass" is false if any property failed.
inline json run_experiment(const ExperimentConfig& cfg,
                           const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string());

  json summary;
  switch (cfg.experiment) {
    case Experiment::noise_propagation:
      summary = run_noise_propagation_experiment(cfg, dir);
      break;
    case Experiment::quadratic:
      summary = run_quadratic_experiment(cfg, dir);
      break;
    case Experiment::lqr:
      summary = run_lqr_experiment(cfg, dir);
      break;
    case Experiment::hb_rate:
      summary = run_hb_rate_experiment(cfg, dir);
      break;
    case Experiment::spectral_sweep:
      summary = run_spectral_sweep_experiment(cfg, dir);
      break;
  }
  bool all = true;
  for (const json& p : summary["properties"]) all = all && p["pass"].get<bool>();
  summary["experiment"] = to_string(cfg.experiment);
  summary["all_pass"] = all;

  ExperimentConfig echoed = cfg;
  echoed.output_dir.clear();
  {
    std::ofstream out(dir / "config.json", std::ios::binary | std::ios::trunc);
    out << to_json(echoed).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write config.json");
  }
  {
    std::ofstream out(dir / "summary.json", std::ios::binary | std::ios::trunc);
    out << summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write summary.json");
  }
  return summary;
}

}  // namespace igt::runner

#endif  // IGT_RUNNER_EXPERIMENTS_HPP
