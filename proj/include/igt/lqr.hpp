#ifndef IGT_LQR_HPP
#define IGT_LQR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "igt/rng.hpp"

namespace igt::lqr {

using Matrix = Eigen::MatrixXd;

/// s_{h+1} = A s_h + B a_h, cost s^T Q s + a^T R a per step plus a terminal
/// s_H^T Q s_H, s_0 ~ N(0, s0_var I).
struct LqrSystem {
  Matrix A;  // n x n
  Matrix B;  // n x m
  Matrix Q;  // n x n, SPD
  Matrix R;  // m x m, SPD
  int horizon = 10;
  double s0_var = 3.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index action_dim() const { return B.cols(); }
};

/// Gain K (m x n) of the policy a = K s + eps, eps ~ N(0, I).
using LinearPolicy = Matrix;

namespace detail {

inline Matrix random_orthogonal(Eigen::Index k, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  for (Eigen::Index j = 0; j < k; ++j)
    if (qr.matrixQR()(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// U diag(lambda) U^T with lambda geometric from 1 to cond.
inline Matrix random_spd(Eigen::Index k, double cond, Rng& rng) {
  Eigen::VectorXd lambda(k);
  for (Eigen::Index i = 0; i < k; ++i)
    lambda[i] = k == 1 ? 1.0 : std::pow(cond, double(i) / double(k - 1));
  const Matrix u = random_orthogonal(k, rng);
  Matrix s = u * lambda.asDiagonal() * u.transpose();
  return 0.5 * (s + s.transpose());
}

inline Matrix unit_frobenius_gaussian(Eigen::Index rows, Eigen::Index cols,
                                      Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m / m.norm();
}

}  // namespace detail

inline LqrSystem make_lqr(std::uint64_t seed, int n = 20, int m = 12,
                          int horizon = 10) {
  if (n < 1 || m < 1) throw std::invalid_argument("make_lqr: n, m must be >= 1");
  if (horizon < 1) throw std::invalid_argument("make_lqr: horizon must be >= 1");
  Rng rng = make_rng({seed, 0x1c});
  LqrSystem sys;
  sys.Q = detail::random_spd(n, 3.0, rng);
  sys.R = detail::random_spd(m, 3.0, rng);
  sys.A = detail::unit_frobenius_gaussian(n, n, rng);
  sys.B = detail::unit_frobenius_gaussian(n, m, rng);
  sys.horizon = horizon;
  return sys;
}

struct Trajectory {
  std::vector<Eigen::VectorXd> states;   // s_0 .. s_H
  std::vector<Eigen::VectorXd> actions;  // a_0 .. a_{H-1}
  std::vector<double> step_costs;        // H stage costs, then the terminal cost
  double total_cost = 0.0;
  Matrix score;  // sum_h grad_K log pi(a_h | s_h) = sum_h eps_h s_h^T
};

inline Trajectory rollout(const LqrSystem& sys, const LinearPolicy& K,
                          Rng& rng) {
  const Eigen::Index n = sys.state_dim(), m = sys.action_dim();
  if (K.rows() != m || K.cols() != n)
    throw std::invalid_argument("rollout: gain has wrong shape");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s0_std = std::sqrt(sys.s0_var);

  Trajectory tr;
  tr.score = Matrix::Zero(m, n);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = s0_std * normal(rng);
  Eigen::VectorXd eps(m);
  for (int h = 0; h < sys.horizon; ++h) {
    for (Eigen::Index i = 0; i < m; ++i) eps[i] = normal(rng);
    Eigen::VectorXd a = K * s + eps;
    const double c = s.dot(sys.Q * s) + a.dot(sys.R * a);
    tr.step_costs.push_back(c);
    tr.total_cost += c;
    tr.score.noalias() += eps * s.transpose();
    tr.states.push_back(s);
    Eigen::VectorXd next = sys.A * s + sys.B * a;
    tr.actions.push_back(std::move(a));
    s = std::move(next);
  }
  const double terminal = s.dot(sys.Q * s);
  tr.step_costs.push_back(terminal);
  tr.total_cost += terminal;
  tr.states.push_back(std::move(s));
  return tr;
}

struct ReinforceOptions {
  /// Discard a trajectory whose gradient term (score * cost) has Frobenius
  /// norm above filter_factor times the batch median. nullopt disables.
  std::optional<double> filter_factor = 10.0;
};

struct ReinforceEstimate {
  Matrix gradient;
  int kept = 0;
  double mean_cost = 0.0;  // over kept trajectories
};

/// Score-function estimate of the gradient of the expected total cost at K,
/// averaged over n_traj rollouts. Rollout j draws from its own substream
/// derive_seed({stream, j}); the reduction runs in index order.
inline ReinforceEstimate reinforce_gradient(const LqrSystem& sys,
                                            const LinearPolicy& K, int n_traj,
                                            std::uint64_t stream,
                                            const ReinforceOptions& opt = {}) {
  if (n_traj < 1) throw std::invalid_argument("reinforce_gradient: n_traj < 1");
  std::vector<Matrix> terms;
  std::vector<double> norms, costs;
  terms.reserve(std::size_t(n_traj));
  for (int j = 0; j < n_traj; ++j) {
    Rng rng = make_rng({stream, std::uint64_t(j)});
    const Trajectory tr = rollout(sys, K, rng);
    terms.push_back(tr.score * tr.total_cost);
    norms.push_back(terms.back().norm());
    costs.push_back(tr.total_cost);
  }

  double threshold = std::numeric_limits<double>::infinity();
  if (opt.filter_factor) {
    std::vector<double> sorted = norms;
    const std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(mid),
                     sorted.end());
    double median = sorted[mid];
    if (sorted.size() % 2 == 0) {
      const double lower =
          *std::max_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(mid));
      median = 0.5 * (median + lower);
    }
    threshold = *opt.filter_factor * median;
  }

  ReinforceEstimate est;
  est.gradient = Matrix::Zero(K.rows(), K.cols());
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (!(norms[j] <= threshold)) continue;
    est.gradient += terms[j];
    est.mean_cost += costs[j];
    ++est.kept;
  }
  if (est.kept == 0)
    throw std::runtime_error("reinforce_gradient: every trajectory was discarded");
  est.gradient /= double(est.kept);
  est.mean_cost /= double(est.kept);
  return est;
}

/// Expected total cost under the stochastic policy, by propagating the state
/// second moment through the closed loop:
///   Sigma_{h+1} = (A + B K) Sigma_h (A + B K)^T + B B^T.
inline double exact_expected_cost(const LqrSystem& sys, const LinearPolicy& K) {
  const Eigen::Index n = sys.state_dim();
  const Matrix F = sys.A + sys.B * K;
  const Matrix M = sys.Q + K.transpose() * sys.R * K;
  const Matrix BBt = sys.B * sys.B.transpose();
  const double trR = sys.R.trace();
  Matrix sigma = sys.s0_var * Matrix::Identity(n, n);
  double cost = 0.0;
  for (int h = 0; h < sys.horizon; ++h) {
    cost += (M * sigma).trace() + trR;
    sigma = F * sigma * F.transpose() + BBt;
  }
  return cost + (sys.Q * sigma).trace();
}

/// Central finite differences of exact_expected_cost, entrywise.
inline Matrix exact_cost_gradient(const LqrSystem& sys, const LinearPolicy& K,
                                  double step = 1e-5) {
  Matrix g(K.rows(), K.cols());
  LinearPolicy k = K;
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double orig = k(i, j);
      k(i, j) = orig + step;
      const double up = exact_expected_cost(sys, k);
      k(i, j) = orig - step;
      const double down = exact_expected_cost(sys, k);
      k(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

/// Adjoint form of the same gradient:
///   sum_h 2 (R K + B^T P_{h+1} F) Sigma_h,
/// with P the closed-loop cost-to-go, P_H = Q.
inline Matrix analytic_cost_gradient(const LqrSystem& sys,
                                     const LinearPolicy& K) {
  const Eigen::Index n = sys.state_dim();
  const Matrix F = sys.A + sys.B * K;
  const Matrix M = sys.Q + K.transpose() * sys.R * K;
  const Matrix BBt = sys.B * sys.B.transpose();
  std::vector<Matrix> sigma;
  sigma.reserve(std::size_t(sys.horizon) + 1);
  sigma.push_back(sys.s0_var * Matrix::Identity(n, n));
  for (int h = 0; h < sys.horizon; ++h)
    sigma.push_back(F * sigma.back() * F.transpose() + BBt);

  Matrix P = sys.Q;
  Matrix grad = Matrix::Zero(K.rows(), K.cols());
  const Matrix RK = sys.R * K;
  for (int h = sys.horizon - 1; h >= 0; --h) {
    grad += 2.0 * (RK + sys.B.transpose() * P * F) * sigma[std::size_t(h)];
    P = M + F.transpose() * P * F;
  }
  return grad;
}

struct RiccatiSolution {
  std::vector<Matrix> gains;  // K_0 .. K_{H-1}
  std::vector<Matrix> cost_to_go;  // P_0 .. P_H
  double deterministic_cost = 0.0;  // tr(P_0 Sigma_0)
  /// Adds the unavoidable exploration-noise cost of a = K s + eps:
  /// sum_h tr(R + B^T P_{h+1} B).
  double stochastic_cost = 0.0;
};

/// Finite-horizon backward Riccati recursion; the optimal time-varying gains.
inline RiccatiSolution riccati_optimal(const LqrSystem& sys) {
  RiccatiSolution sol;
  sol.gains.resize(std::size_t(sys.horizon));
  sol.cost_to_go.resize(std::size_t(sys.horizon) + 1);
  Matrix P = sys.Q;
  sol.cost_to_go.back() = P;
  double noise_cost = 0.0;
  for (int h = sys.horizon - 1; h >= 0; --h) {
    const Matrix S = sys.R + sys.B.transpose() * P * sys.B;
    Eigen::LDLT<Matrix> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0)
      throw std::runtime_error("riccati_optimal: R + B^T P B is singular");
    const Matrix K = -ldlt.solve(sys.B.transpose() * P * sys.A);
    const Matrix F = sys.A + sys.B * K;
    noise_cost += S.trace();
    P = sys.Q + K.transpose() * sys.R * K + F.transpose() * P * F;
    P = 0.5 * (P + P.transpose());
    sol.gains[std::size_t(h)] = K;
    sol.cost_to_go[std::size_t(h)] = P;
  }
  sol.deterministic_cost = sys.s0_var * P.trace();
  sol.stochastic_cost = sol.deterministic_cost + noise_cost;
  return sol;
}

}  // namespace igt::lqr

#endif  // IGT_LQR_HPP
