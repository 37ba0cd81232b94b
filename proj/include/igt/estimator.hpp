#ifndef IGT_ESTIMATOR_HPP
#define IGT_ESTIMATOR_HPP

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "igt/schedules.hpp"
#include "igt/types.hpp"

namespace igt {

enum class EstimatorKind { sgd, momentum, igt, ita };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::sgd;
  double gamma = 0.0;          // momentum only, in [0, 1)
  double tail_fraction = 1.0;  // ita only, in (0, 1]

  static EstimatorConfig sgd() { return {}; }
  static EstimatorConfig momentum(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("momentum gamma must lie in [0, 1)");
    return {EstimatorKind::momentum, gamma, 1.0};
  }
  static EstimatorConfig igt() { return {EstimatorKind::igt, 0.0, 1.0}; }
  static EstimatorConfig ita(double c) {
    if (!(c > 0.0 && c <= 1.0))
      throw std::invalid_argument("tail fraction must lie in (0, 1]");
    return {EstimatorKind::ita, 0.0, c};
  }
};

/// Opaque tag binding a gradient sample to the query that requested it.
struct QueryToken {
  std::uint64_t owner = 0;
  std::uint64_t nonce = 0;
  std::uint64_t step = 0;

  friend bool operator==(const QueryToken&, const QueryToken&) = default;
};

template <typename Scalar = double>
struct Query {
  Vector<Scalar> point;
  QueryToken token;
};

template <typename Scalar = double>
struct GradientSample {
  Vector<Scalar> values;
  Vector<Scalar> query_point;
  QueryToken token;
};

namespace detail {
inline std::uint64_t next_estimator_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

/// Two-phase gradient estimator.
///
/// Each step first calls query() with the current iterate to learn where the
/// stochastic gradient must be measured, then hands the measurement back to
/// update(). For the transported kinds (igt, ita) the query point is
/// extrapolated along the last displacement; the velocity returned by
/// update() is the running estimate of the gradient at the current iterate.
///
///   v_t = gamma_t v_{t-1} + (1 - gamma_t) g(query_t)
///
/// with gamma_0 = 0 for every kind, so v_0 is the first raw sample.
template <typename Scalar = double>
class GradientEstimator {
 public:
  using VectorType = Vector<Scalar>;

  explicit GradientEstimator(EstimatorConfig config = {})
      : config_(config), id_(detail::next_estimator_id()) {}

  const EstimatorConfig& config() const { return config_; }
  std::uint64_t step() const { return t_; }
  const VectorType& velocity() const { return v_; }
  const VectorType& previous_iterate() const { return theta_prev_; }

  /// Averaging weight applied at step t.
  Scalar weight(std::uint64_t t) const {
    if (t == 0) return Scalar(0);
    switch (config_.kind) {
      case EstimatorKind::sgd:
        return Scalar(0);
      case EstimatorKind::momentum:
        return Scalar(config_.gamma);
      case EstimatorKind::igt:
        return igt_gamma<Scalar>(t);
      case EstimatorKind::ita:
        return ata_gamma<Scalar>(t + 1, Scalar(config_.tail_fraction));
    }
    return Scalar(0);
  }

  Query<Scalar> query(const VectorType& theta) {
    require_finite(theta, "estimator query");
    if (t_ > 0) require_same_size(theta, theta_prev_, "estimator query");

    VectorType point;
    if (t_ == 0 || config_.kind == EstimatorKind::sgd ||
        config_.kind == EstimatorKind::momentum) {
      point = theta;
    } else if (config_.kind == EstimatorKind::igt) {
      point = transport_point_exact<Scalar>(theta, theta_prev_, t_);
    } else {
      point = transport_point<Scalar>(theta, theta_prev_, weight(t_));
    }

    QueryToken token{id_, ++nonce_, t_};
    pending_ = Pending{theta, point, token};
    return {std::move(point), token};
  }

  /// Folds a gradient measured at the pending query point into the velocity.
  /// Throws contract_error if the sample does not answer the pending query.
  const VectorType& update(const VectorType& theta,
                           const GradientSample<Scalar>& sample) {
    if (!pending_)
      throw contract_error("estimator update without a pending query");
    if (!(sample.token == pending_->token))
      throw contract_error("gradient sample answers a different query");
    if (sample.query_point.size() != pending_->point.size() ||
        sample.query_point != pending_->point)
      throw contract_error("gradient sample was not measured at the query point");
    if (theta.size() != pending_->theta.size() || theta != pending_->theta)
      throw contract_error("iterate changed between query and update");
    require_same_size(sample.values, theta, "estimator update");
    require_finite(sample.values, "estimator update");

    if (t_ == 0 || config_.kind == EstimatorKind::sgd) {
      v_ = sample.values;
    } else {
      // v += (1 - gamma)(g - v) leaves v untouched when g == v.
      const Scalar step_weight = config_.kind == EstimatorKind::igt
                                     ? Scalar(1) / Scalar(t_ + 1)
                                     : Scalar(1) - weight(t_);
      v_ += step_weight * (sample.values - v_);
    }
    theta_prev_ = std::move(pending_->theta);
    pending_.reset();
    ++t_;
    return v_;
  }

  /// query, evaluate, update in one call. The oracle maps a point to the
  /// stochastic gradient measured there.
  template <typename Oracle>
  const VectorType& estimate(const VectorType& theta, Oracle&& oracle) {
    Query<Scalar> q = query(theta);
    VectorType g = oracle(static_cast<const VectorType&>(q.point));
    return update(theta, GradientSample<Scalar>{std::move(g), std::move(q.point),
                                                q.token});
  }

 private:
  struct Pending {
    VectorType theta;
    VectorType point;
    QueryToken token;
  };

  EstimatorConfig config_;
  std::uint64_t id_;
  std::uint64_t nonce_ = 0;
  std::uint64_t t_ = 0;
  VectorType v_;
  VectorType theta_prev_;
  std::optional<Pending> pending_;
};

}  // namespace igt

#endif  // IGT_ESTIMATOR_HPP
