#ifndef IGT_QUADRATIC_HPP
#define IGT_QUADRATIC_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "igt/rng.hpp"
#include "igt/types.hpp"

namespace igt {

/// f(theta) = 1/2 (theta - theta*)^T H (theta - theta*) with gradient noise
/// eps ~ N(0, noise_std^2 I). H is stored by its spectrum; an optional
/// orthogonal rotation gives H = U diag(eigs) U^T.
struct QuadraticProblem {
  Eigen::VectorXd eigs;
  ParamVector theta_star;
  double noise_std = 0.0;
  Eigen::MatrixXd rotation;  // empty: diagonal frame

  Eigen::Index dim() const { return eigs.size(); }
  double L() const { return eigs.maxCoeff(); }
  double kappa() const { return eigs.maxCoeff() / eigs.minCoeff(); }
  bool rotated() const { return rotation.size() != 0; }

  template <typename Scalar>
  Vector<Scalar> hessian_apply(const Vector<Scalar>& x) const {
    if (!rotated()) return eigs.cast<Scalar>().cwiseProduct(x);
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> u =
        rotation.cast<Scalar>();
    return u * eigs.cast<Scalar>().cwiseProduct(u.transpose() * x);
  }
};

/// Eigenvalues geometrically spaced from L/kappa to L (both endpoints exact),
/// theta* ~ N(0, I) drawn from the seed.
inline QuadraticProblem make_quadratic(int d, double kappa, double L,
                                       double noise_std, std::uint64_t seed,
                                       bool rotate = false) {
  if (d < 1) throw std::invalid_argument("make_quadratic: d must be >= 1");
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw std::invalid_argument("make_quadratic: kappa must be >= 1");
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("make_quadratic: L must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("make_quadratic: noise_std must be >= 0");

  QuadraticProblem p;
  p.noise_std = noise_std;
  p.eigs.resize(d);
  const double lo = L / kappa;
  for (int i = 0; i < d; ++i) {
    p.eigs[i] = d == 1 ? L : lo * std::pow(kappa, double(i) / double(d - 1));
  }
  p.eigs[0] = d == 1 ? L : lo;
  p.eigs[d - 1] = L;

  Rng rng = make_rng({seed, 0x71});
  std::normal_distribution<double> normal(0.0, 1.0);
  p.theta_star.resize(d);
  for (int i = 0; i < d; ++i) p.theta_star[i] = normal(rng);

  if (rotate) {
    Eigen::MatrixXd g(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    p.rotation = std::move(q);
  }
  return p;
}

template <typename Scalar = double>
Vector<Scalar> true_gradient(const QuadraticProblem& p,
                             const Vector<Scalar>& theta) {
  if (theta.size() != p.dim())
    throw std::invalid_argument("true_gradient: dimension mismatch");
  const Vector<Scalar> delta = theta - p.theta_star.cast<Scalar>();
  return p.hessian_apply<Scalar>(delta);
}

template <typename Scalar = double>
struct NoisyGradient {
  Vector<Scalar> values;
  ParamVector noise;
};

inline ParamVector draw_noise(const QuadraticProblem& p, Rng& rng) {
  ParamVector eps(p.dim());
  if (p.noise_std == 0.0) {
    eps.setZero();
    return eps;
  }
  std::normal_distribution<double> normal(0.0, p.noise_std);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = normal(rng);
  return eps;
}

template <typename Scalar = double>
NoisyGradient<Scalar> stochastic_gradient(const QuadraticProblem& p,
                                          const Vector<Scalar>& theta,
                                          Rng& rng) {
  NoisyGradient<Scalar> out;
  out.noise = draw_noise(p, rng);
  out.values = true_gradient<Scalar>(p, theta);
  if (p.noise_std != 0.0) out.values += out.noise.template cast<Scalar>();
  return out;
}

/// Stochastic first-order oracle over a quadratic. Every noise vector it adds
/// is appended to noises(); constructing it from a recorded sequence replays
/// that sequence instead of sampling.
template <typename Scalar = double>
class QuadraticOracle {
 public:
  QuadraticOracle(const QuadraticProblem& problem, std::uint64_t seed)
      : problem_(&problem), rng_(make_rng({seed, 0x6e6f})) {}

  QuadraticOracle(const QuadraticProblem& problem,
                  std::vector<ParamVector> replay)
      : problem_(&problem), replay_(std::move(replay)), replaying_(true) {}

  Vector<Scalar> operator()(const Vector<Scalar>& point) {
    ParamVector eps;
    if (replaying_) {
      if (cursor_ >= replay_.size())
        throw std::out_of_range("QuadraticOracle: replay exhausted");
      eps = replay_[cursor_++];
    } else {
      eps = draw_noise(*problem_, rng_);
    }
    Vector<Scalar> g = true_gradient<Scalar>(*problem_, point);
    g += eps.cast<Scalar>();
    if (recording_) noises_.push_back(std::move(eps));
    return g;
  }

  const std::vector<ParamVector>& noises() const { return noises_; }
  void set_recording(bool on) { recording_ = on; }
  const QuadraticProblem& problem() const { return *problem_; }

 private:
  const QuadraticProblem* problem_;
  Rng rng_;
  std::vector<ParamVector> replay_;
  bool replaying_ = false;
  std::size_t cursor_ = 0;
  bool recording_ = true;
  std::vector<ParamVector> noises_;
};

/// Right-hand side of the IGT convergence bound at alpha = 1/L:
///
///   (1 - 1/kappa)^{2t} |theta_0 - theta*|^2 + d alpha^2 B nu0^2 / t,
///   nu0 = (2 + 2 log kappa) kappa.
///
/// Only meaningful for t > 2 kappa; smaller t is rejected.
inline double prop1_bound(double alpha, double kappa, int d, double noise_bound,
                          double delta0_sq, double t) {
  if (!(t > 2.0 * kappa))
    throw std::invalid_argument("prop1_bound: requires t > 2 kappa");
  if (!(kappa >= 1.0)) throw std::invalid_argument("prop1_bound: kappa < 1");
  const double nu0 = (2.0 + 2.0 * std::log(kappa)) * kappa;
  const double bias = std::pow(1.0 - 1.0 / kappa, 2.0 * t) * delta0_sq;
  const double variance = double(d) * alpha * alpha * noise_bound * nu0 * nu0 / t;
  return bias + variance;
}

}  // namespace igt

#endif  // IGT_QUADRATIC_HPP
