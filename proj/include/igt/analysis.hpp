#ifndef IGT_ANALYSIS_HPP
#define IGT_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "igt/types.hpp"

namespace igt {

struct RunRow {
  std::uint64_t t = 0;
  double error_sq = 0.0;      // |theta_t - theta*|^2
  double est_noise_sq = 0.0;  // |v_t - g(theta_t)|^2
  double est_norm = 0.0;      // |v_t|
  double cosine = 0.0;        // cos(v_t, g(theta_t))
  double cost = std::numeric_limits<double>::quiet_NaN();  // LQR only
  // Plain stochastic gradient g(theta_t) + eps' drawn at the same iterate,
  // for comparing the estimator against the raw sample at matched distance.
  double raw_noise_sq = std::numeric_limits<double>::quiet_NaN();
  double raw_cosine = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::vector<RunRow> rows;

  /// Cosines in [-1, 1], squared norms >= 0, strictly increasing t.
  bool valid() const {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const RunRow& r = rows[k];
      if (k > 0 && !(r.t > rows[k - 1].t)) return false;
      if (r.error_sq < 0.0 || r.est_noise_sq < 0.0 || r.est_norm < 0.0)
        return false;
      if (r.cosine < -1.0 || r.cosine > 1.0) return false;
    }
    return true;
  }
};

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one of the vectors was zero; value is 0
};

template <typename Scalar>
CosineResult cosine_similarity(const Vector<Scalar>& u, const Vector<Scalar>& v) {
  require_same_size(u, v, "cosine_similarity");
  const double nu = double(u.norm()), nv = double(v.norm());
  if (nu == 0.0 || nv == 0.0) return {0.0, true};
  const double c = double(u.dot(v)) / (nu * nv);
  return {std::clamp(c, -1.0, 1.0), false};
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

inline LinearFit least_squares(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 paired points");
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate x");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.n = x.size();
  return fit;
}

/// Least-squares slope of log y against log t over t in [t_min, t_max].
inline double loglog_slope(const std::vector<double>& t,
                           const std::vector<double>& y, double t_min,
                           double t_max) {
  if (t.size() != y.size())
    throw std::invalid_argument("loglog_slope: series length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_min || t[k] > t_max) continue;
    if (!(y[k] > 0.0))
      throw std::invalid_argument("loglog_slope: non-positive value in window");
    lx.push_back(std::log(t[k]));
    ly.push_back(std::log(y[k]));
  }
  if (lx.size() < 10)
    throw std::invalid_argument("loglog_slope: fewer than 10 points in window");
  return least_squares(lx, ly).slope;
}

struct SeedAggregate {
  std::vector<std::uint64_t> t;
  std::vector<RunRow> mean;
  std::vector<RunRow> stddev;  // sample standard deviation (n - 1)
};

/// Pointwise mean and sample standard deviation over runs sharing one grid.
inline SeedAggregate seed_aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("seed_aggregate: no records");
  const std::size_t rows = records.front().rows.size();
  for (const RunRecord& r : records) {
    if (r.rows.size() != rows)
      throw std::invalid_argument("seed_aggregate: mismatched step grids");
    for (std::size_t k = 0; k < rows; ++k)
      if (r.rows[k].t != records.front().rows[k].t)
        throw std::invalid_argument("seed_aggregate: mismatched step grids");
  }

  auto fields = [](RunRow& r) {
    return std::array<double*, 7>{&r.error_sq, &r.est_noise_sq, &r.est_norm,
                                  &r.cosine,   &r.cost,         &r.raw_noise_sq,
                                  &r.raw_cosine};
  };

  SeedAggregate agg;
  const double n = double(records.size());
  for (std::size_t k = 0; k < rows; ++k) {
    RunRow mean{}, var{};
    mean.t = var.t = records.front().rows[k].t;
    auto mf = fields(mean);
    auto vf = fields(var);
    for (double* p : mf) *p = 0.0;
    for (double* p : vf) *p = 0.0;
    for (const RunRecord& r : records) {
      RunRow row = r.rows[k];
      auto rf = fields(row);
      for (std::size_t f = 0; f < rf.size(); ++f) *mf[f] += *rf[f] / n;
    }
    if (records.size() > 1) {
      for (const RunRecord& r : records) {
        RunRow row = r.rows[k];
        auto rf = fields(row);
        for (std::size_t f = 0; f < rf.size(); ++f) {
          const double d = *rf[f] - *mf[f];
          *vf[f] += d * d / (n - 1.0);
        }
      }
    }
    for (double* p : vf) *p = std::sqrt(*p);
    agg.t.push_back(mean.t);
    agg.mean.push_back(mean);
    agg.stddev.push_back(var);
  }
  return agg;
}

struct Bin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
};

/// Means of `value` over logarithmic bins of `key` spanning its observed
/// positive range. Bins with fewer than min_count samples report count but a
/// NaN mean.
inline std::vector<Bin> log_binned_means(const std::vector<double>& key,
                                         const std::vector<double>& value,
                                         double lo, double hi,
                                         std::size_t n_bins,
                                         std::size_t min_count) {
  if (key.size() != value.size())
    throw std::invalid_argument("log_binned_means: length mismatch");
  if (!(lo > 0.0 && hi > lo) || n_bins == 0)
    throw std::invalid_argument("log_binned_means: bad bin range");
  const double llo = std::log(lo), lhi = std::log(hi);
  const double width = (lhi - llo) / double(n_bins);
  std::vector<Bin> bins(n_bins);
  std::vector<double> sums(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = std::exp(llo + width * double(b));
    bins[b].hi = std::exp(llo + width * double(b + 1));
  }
  for (std::size_t k = 0; k < key.size(); ++k) {
    if (!(key[k] >= lo && key[k] <= hi)) continue;
    std::size_t b = std::size_t((std::log(key[k]) - llo) / width);
    b = std::min(b, n_bins - 1);
    sums[b] += value[k];
    ++bins[b].count;
  }
  for (std::size_t b = 0; b < n_bins; ++b)
    bins[b].mean = bins[b].count >= min_count && bins[b].count > 0
                       ? sums[b] / double(bins[b].count)
                       : std::numeric_limits<double>::quiet_NaN();
  return bins;
}

}  // namespace igt

#endif  // IGT_ANALYSIS_HPP
