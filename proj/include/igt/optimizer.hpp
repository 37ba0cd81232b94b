#ifndef IGT_OPTIMIZER_HPP
#define IGT_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "igt/estimator.hpp"
#include "igt/types.hpp"

namespace igt {

enum class UpdateRule { sgd, heavy_ball, adam };

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::sgd;
  double alpha = 0.1;
  double mu = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  EstimatorConfig estimator{};

  static OptimizerConfig sgd(double alpha) {
    return {UpdateRule::sgd, alpha};
  }
  static OptimizerConfig heavy_ball(double alpha, double mu) {
    return {UpdateRule::heavy_ball, alpha, mu};
  }
  static OptimizerConfig heavy_ball_igt(double alpha, double mu) {
    OptimizerConfig c{UpdateRule::heavy_ball, alpha, mu};
    c.estimator = EstimatorConfig::igt();
    return c;
  }
  static OptimizerConfig adam(double alpha, double eps = 1e-8) {
    OptimizerConfig c{UpdateRule::adam, alpha};
    c.eps = eps;
    return c;
  }
  /// Adam on top of the tail-averaged transported estimate. Reducing the
  /// variance of the estimate shrinks Adam's second moment, which is why a
  /// larger eps is usually wanted here.
  static OptimizerConfig adam_ita(double alpha, double tail_fraction,
                                  double eps = 1e-8) {
    OptimizerConfig c = adam(alpha, eps);
    c.estimator = EstimatorConfig::ita(tail_fraction);
    return c;
  }

  OptimizerConfig with_estimator(EstimatorConfig e) const {
    OptimizerConfig c = *this;
    c.estimator = e;
    return c;
  }

  void validate() const {
    if (!(std::isfinite(alpha) && alpha > 0.0))
      throw std::invalid_argument("stepsize must be finite and positive");
    if (rule == UpdateRule::heavy_ball && !(mu >= 0.0 && mu < 1.0))
      throw std::invalid_argument("heavy-ball momentum must lie in [0, 1)");
    if (rule == UpdateRule::adam &&
        !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 &&
          eps > 0.0))
      throw std::invalid_argument("invalid Adam constants");
  }
};

/// Parameter update rule driven by a pluggable gradient estimator.
///
///   sgd:        theta' = theta - alpha v
///   heavy_ball: w = mu w - alpha v, theta' = theta + w   (w_{-1} = 0)
///   adam:       bias-corrected Adam moments of v
///
/// With the igt estimator and the heavy_ball rule this is Heavyball-IGT.
template <typename Scalar = double>
class Optimizer {
 public:
  using VectorType = Vector<Scalar>;

  explicit Optimizer(OptimizerConfig config)
      : config_(std::move(config)), estimator_(config_.estimator) {
    config_.validate();
  }

  const OptimizerConfig& config() const { return config_; }
  const GradientEstimator<Scalar>& estimator() const { return estimator_; }
  GradientEstimator<Scalar>& estimator() { return estimator_; }
  const VectorType& displacement() const { return w_; }
  const VectorType& adam_first_moment() const { return m_; }
  const VectorType& adam_second_moment() const { return s_; }
  std::uint64_t step_count() const { return estimator_.step(); }

  template <typename Oracle>
  VectorType step(const VectorType& theta, Oracle&& oracle) {
    const VectorType& v = estimator_.estimate(theta, std::forward<Oracle>(oracle));
    const Scalar alpha(config_.alpha);
    switch (config_.rule) {
      case UpdateRule::sgd:
        return theta - alpha * v;
      case UpdateRule::heavy_ball: {
        if (w_.size() == 0) {
          w_ = -alpha * v;
        } else {
          w_ = Scalar(config_.mu) * w_ - alpha * v;
        }
        return theta + w_;
      }
      case UpdateRule::adam:
        return adam_step(theta, v);
    }
    throw std::logic_error("unknown update rule");
  }

 private:
  VectorType adam_step(const VectorType& theta, const VectorType& g) {
    using std::pow;
    using std::sqrt;
    const Scalar b1(config_.beta1), b2(config_.beta2);
    if (m_.size() == 0) {
      m_ = VectorType::Zero(g.size());
      s_ = VectorType::Zero(g.size());
    }
    ++adam_t_;
    m_ = b1 * m_ + (Scalar(1) - b1) * g;
    s_ = b2 * s_ + (Scalar(1) - b2) * g.cwiseProduct(g);
    const Scalar c1 = Scalar(1) - pow(b1, Scalar(adam_t_));
    const Scalar c2 = Scalar(1) - pow(b2, Scalar(adam_t_));
    VectorType next = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const Scalar m_hat = m_[i] / c1;
      const Scalar s_hat = s_[i] / c2;
      next[i] -= Scalar(config_.alpha) * m_hat / (sqrt(s_hat) + Scalar(config_.eps));
    }
    return next;
  }

  OptimizerConfig config_;
  GradientEstimator<Scalar> estimator_;
  VectorType w_;
  VectorType m_;
  VectorType s_;
  std::uint64_t adam_t_ = 0;
};

/// One step of the velocity-free IGT recursion
///
///   theta_{t+1} = (2t+1)/(t+1) theta_t - t/(t+1) theta_{t-1}
///                 - alpha/(t+1) g(theta_t + t (theta_t - theta_{t-1}))
///
/// At t = 0 it reduces to theta_1 = theta_0 - alpha g(theta_0) and
/// theta_prev is ignored.
template <typename Scalar, typename Oracle>
Vector<Scalar> igt_direct_step(const Vector<Scalar>& theta,
                               const Vector<Scalar>& theta_prev,
                               std::uint64_t t, Scalar alpha, Oracle&& oracle) {
  if (t == 0) {
    Vector<Scalar> g = oracle(theta);
    require_same_size(g, theta, "igt_direct_step");
    return theta - alpha * g;
  }
  require_same_size(theta, theta_prev, "igt_direct_step");
  const Scalar tt(t);
  const Vector<Scalar> point = theta + tt * (theta - theta_prev);
  Vector<Scalar> g = oracle(point);
  require_same_size(g, theta, "igt_direct_step");
  return (Scalar(2 * t + 1) / (tt + Scalar(1))) * theta -
         (tt / (tt + Scalar(1))) * theta_prev - (alpha / (tt + Scalar(1))) * g;
}

struct HeavyBallTuning {
  double alpha;
  double mu;
};

/// Classical optimal heavy-ball tuning for a quadratic with largest
/// eigenvalue L and condition number kappa.
inline HeavyBallTuning optimal_hb_tuning(double L, double kappa) {
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
  const double sk = std::sqrt(kappa);
  const double root_mu = (sk - 1.0) / (sk + 1.0);
  const double mu = root_mu * root_mu;
  const double alpha = (1.0 + root_mu) * (1.0 + root_mu) / L;
  return {alpha, mu};
}

}  // namespace igt

#endif  // IGT_OPTIMIZER_HPP
