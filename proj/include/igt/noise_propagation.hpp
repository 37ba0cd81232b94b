#ifndef IGT_NOISE_PROPAGATION_HPP
#define IGT_NOISE_PROPAGATION_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace igt {

/// N(i, t): weight of the noise injected at step i in the deviation of the
/// t-th iterate from its mean, along one eigendirection of curvature h.
struct NoiseCoefficients {
  Eigen::MatrixXd values;  // (T+1) x (T+1), row i, column t

  double operator()(std::size_t i, std::size_t t) const {
    return values(Eigen::Index(i), Eigen::Index(t));
  }
  std::size_t horizon() const { return std::size_t(values.cols()) - 1; }
};

/// Row i of the IGT noise recursion for t = 0..T:
///   N(i, 0) = 0,  N(i, t) = (1 - alpha h) N(i, t-1) + [i < t] / t.
inline std::vector<double> igt_noise_row(double alpha, double h, std::size_t i,
                                         std::size_t T) {
  std::vector<double> row(T + 1, 0.0);
  const double r = 1.0 - alpha * h;
  for (std::size_t t = 1; t <= T; ++t)
    row[t] = r * row[t - 1] + (i < t ? 1.0 / double(t) : 0.0);
  return row;
}

inline NoiseCoefficients igt_noise_coeffs(double alpha, double h,
                                          std::size_t T) {
  NoiseCoefficients n;
  n.values = Eigen::MatrixXd::Zero(Eigen::Index(T + 1), Eigen::Index(T + 1));
  for (std::size_t i = 0; i <= T; ++i) {
    const std::vector<double> row = igt_noise_row(alpha, h, i, T);
    for (std::size_t t = 0; t <= T; ++t)
      n.values(Eigen::Index(i), Eigen::Index(t)) = row[t];
  }
  return n;
}

enum class ImpulseKind { sgd, momentum_fixed, momentum_increasing, igt };

struct ImpulseMethod {
  ImpulseKind kind = ImpulseKind::sgd;
  double gamma = 0.0;  // momentum_fixed only

  static ImpulseMethod sgd() { return {}; }
  static ImpulseMethod momentum_fixed(double gamma) {
    return {ImpulseKind::momentum_fixed, gamma};
  }
  static ImpulseMethod momentum_increasing() {
    return {ImpulseKind::momentum_increasing, 0.0};
  }
  static ImpulseMethod igt() { return {ImpulseKind::igt, 0.0}; }
};

/// Empirical N(i, t), t = 0..T: runs the scalar method on f = h theta^2 / 2
/// from the optimum, injects a unit noise at step i only, and reports
/// |theta_t| / alpha. The mean trajectory is identically zero, so this is
/// |Delta_t - E Delta_t| / alpha.
///
/// momentum_increasing uses gamma_t = 1 - 1/t (t >= 1).
inline std::vector<double> impulse_response(ImpulseMethod method, double alpha,
                                            double h, std::size_t i,
                                            std::size_t T) {
  if (i >= T)
    throw std::invalid_argument("impulse_response: impulse step must be < T");
  std::vector<double> out(T + 1, 0.0);
  double theta = 0.0, theta_prev = 0.0, v = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double eps = t == i ? 1.0 : 0.0;
    double grad;
    double gamma = 0.0;
    switch (method.kind) {
      case ImpulseKind::sgd:
        grad = h * theta + eps;
        break;
      case ImpulseKind::momentum_fixed:
        grad = h * theta + eps;
        gamma = t == 0 ? 0.0 : method.gamma;
        break;
      case ImpulseKind::momentum_increasing:
        grad = h * theta + eps;
        gamma = t == 0 ? 0.0 : 1.0 - 1.0 / double(t);
        break;
      case ImpulseKind::igt:
        grad = h * (theta + double(t) * (theta - theta_prev)) + eps;
        gamma = double(t) / double(t + 1);
        break;
      default:
        throw std::invalid_argument("impulse_response: unknown method");
    }
    v = t == 0 ? grad : gamma * v + (1.0 - gamma) * grad;
    theta_prev = theta;
    theta -= alpha * v;
    out[t + 1] = std::abs(theta) / alpha;
  }
  return out;
}

/// Total variance sum_{i<t} N(i, t)^2 for t = 0..T, via T impulse responses.
inline std::vector<double> total_noise_variance(ImpulseMethod method,
                                                double alpha, double h,
                                                std::size_t T) {
  std::vector<double> total(T + 1, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    const std::vector<double> n = impulse_response(method, alpha, h, i, T);
    for (std::size_t t = i + 1; t <= T; ++t) total[t] += n[t] * n[t];
  }
  return total;
}

inline std::string to_string(ImpulseMethod m) {
  switch (m.kind) {
    case ImpulseKind::sgd:
      return "sgd";
    case ImpulseKind::momentum_fixed: {
      std::string g = std::to_string(m.gamma);
      while (g.size() > 1 && g.back() == '0') g.pop_back();
      return "momentum-" + g;
    }
    case ImpulseKind::momentum_increasing:
      return "momentum-inc";
    case ImpulseKind::igt:
      return "igt";
  }
  return "unknown";
}

}  // namespace igt

#endif  // IGT_NOISE_PROPAGATION_HPP
