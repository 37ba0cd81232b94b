#ifndef IGT_DYNAMICS_HPP
#define IGT_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace igt {

/// Mean-error dynamics of Heavyball-IGT along one eigendirection:
/// (E d_{t+1}, E d_t) = A (E d_t, E d_{t-1}).
inline Eigen::Matrix2d bias_matrix(double alpha, double mu, double h) {
  Eigen::Matrix2d a;
  a << 1.0 - alpha * h + mu, -mu,
       1.0, 0.0;
  return a;
}

/// Variance dynamics of Heavyball-IGT along one eigendirection, acting on
/// (U_t, U_{t-1}, V_t) with U the variance and V the lag-one covariance.
inline Eigen::Matrix3d variance_matrix(double alpha, double mu, double h) {
  const double a = 1.0 - alpha * h + mu;
  Eigen::Matrix3d d;
  d << a * a + 2.0 * alpha * alpha * h * h, mu * mu, -2.0 * mu * a * a,
       1.0, 0.0, 0.0,
       a, 0.0, -mu;
  return d;
}

namespace detail {

// Largest root modulus of x^2 + p x + q.
inline double monic_quadratic_radius(double p, double q) {
  const double disc = p * p - 4.0 * q;
  if (disc < 0.0) return std::sqrt(q);
  const double s = std::sqrt(disc);
  const double big = -0.5 * (p + (p >= 0.0 ? s : -s));
  if (big == 0.0) return 0.0;
  return std::max(std::abs(big), std::abs(q / big));
}

// A real root of x^3 + a x^2 + b x + c by bisection to machine precision.
inline double cubic_real_root(double a, double b, double c) {
  auto f = [&](double x) { return ((x + a) * x + b) * x + c; };
  const double bound =
      1.0 + std::max({std::abs(a), std::abs(b), std::abs(c)});
  double lo = -bound, hi = bound;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    (fm < 0.0 ? lo : hi) = mid;
  }
  return std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi;
}

}  // namespace detail

inline double spectral_radius(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  return detail::monic_quadratic_radius(-tr, det);
}

/// Closed form through the characteristic polynomial: one real root by
/// bisection, then the deflated quadratic.
inline double spectral_radius(const Eigen::Matrix3d& m) {
  const double a = -m.trace();
  const double b = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) +
                   m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                   m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c = -m.determinant();
  const double r = detail::cubic_real_root(a, b, c);
  const double p = a + r;
  const double q = b + r * p;
  return std::max(std::abs(r), detail::monic_quadratic_radius(p, q));
}

struct MomentumSweepPoint {
  double mu;
  double max_rho_bias;      // max over eigendirections of rho(A)
  double max_rho_variance;  // max over eigendirections of rho(D)
  bool stable() const { return max_rho_bias < 1.0 && max_rho_variance < 1.0; }
};

/// Evaluates both dynamics matrices over a momentum grid for a fixed stepsize
/// and Hessian spectrum.
inline std::vector<MomentumSweepPoint> momentum_sweep(
    double alpha, const Eigen::VectorXd& eigs, const std::vector<double>& mus) {
  std::vector<MomentumSweepPoint> out;
  out.reserve(mus.size());
  for (double mu : mus) {
    MomentumSweepPoint pt{mu, 0.0, 0.0};
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
      pt.max_rho_bias =
          std::max(pt.max_rho_bias, spectral_radius(bias_matrix(alpha, mu, eigs[i])));
      pt.max_rho_variance = std::max(
          pt.max_rho_variance, spectral_radius(variance_matrix(alpha, mu, eigs[i])));
    }
    out.push_back(pt);
  }
  return out;
}

inline std::vector<double> default_momentum_grid(std::size_t n = 99) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = double(k + 1) / double(n + 1);
  return g;
}

/// The positive momentum with the smallest worst-case spectral radius among
/// those where every bias and variance matrix is contracting. The stepsize
/// must satisfy alpha < 2 / (3 L).
inline std::optional<MomentumSweepPoint> find_stable_momentum(
    double alpha, const Eigen::VectorXd& eigs,
    const std::vector<double>& mus = default_momentum_grid()) {
  if (!(alpha > 0.0 && alpha < 2.0 / (3.0 * eigs.maxCoeff())))
    throw std::invalid_argument("find_stable_momentum: need 0 < alpha < 2/(3L)");
  std::optional<MomentumSweepPoint> best;
  for (const MomentumSweepPoint& pt : momentum_sweep(alpha, eigs, mus)) {
    if (!(pt.mu > 0.0) || !pt.stable()) continue;
    const double worst = std::max(pt.max_rho_bias, pt.max_rho_variance);
    if (!best || worst < std::max(best->max_rho_bias, best->max_rho_variance))
      best = pt;
  }
  return best;
}

}  // namespace igt

#endif  // IGT_DYNAMICS_HPP
