#ifndef IGT_SCHEDULES_HPP
#define IGT_SCHEDULES_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "igt/types.hpp"

namespace igt {

/// Increasing momentum t/(t+1): the velocity becomes the uniform average of
/// every sample seen so far.
template <typename Scalar = double>
Scalar igt_gamma(std::uint64_t t) {
  return Scalar(t) / Scalar(t + 1);
}

/// Anytime-tail-average weight for the t-th sample (t is 1-based), keeping
/// roughly the last fraction c of the samples.
///
/// The closed form has t(t-1) in a denominator, so t = 1 returns its limit 0.
/// Negative values of the bracket (large c, small t) are clamped to 0, which
/// restarts the average.
template <typename Scalar = double>
Scalar ata_gamma(std::uint64_t t, Scalar c) {
  using std::sqrt;
  if (!(c > Scalar(0) && c <= Scalar(1)))
    throw std::invalid_argument("ata_gamma: tail fraction must lie in (0, 1]");
  if (t < 1) throw std::invalid_argument("ata_gamma: t must be >= 1");
  if (t == 1) return Scalar(0);
  const Scalar tm1 = Scalar(t - 1);
  const Scalar prefactor = c * tm1 / (Scalar(1) + c * tm1);
  const Scalar bracket =
      Scalar(1) - sqrt((Scalar(1) - c) / (Scalar(t) * tm1)) / c;
  const Scalar gamma = prefactor * bracket;
  return gamma > Scalar(0) ? gamma : Scalar(0);
}

/// theta + (gamma / (1 - gamma)) (theta - theta_prev).
template <typename Scalar>
Vector<Scalar> transport_point(const Vector<Scalar>& theta,
                               const Vector<Scalar>& theta_prev,
                               Scalar gamma) {
  require_same_size(theta, theta_prev, "transport_point");
  if (!(gamma < Scalar(1)) || gamma < Scalar(0))
    throw std::invalid_argument("transport_point: gamma must lie in [0, 1)");
  const Scalar multiplier = gamma / (Scalar(1) - gamma);
  return theta + multiplier * (theta - theta_prev);
}

/// Extrapolation with an integer multiplier, theta + t (theta - theta_prev).
/// For gamma = t/(t+1) this is the exact transport, free of the rounding in
/// gamma / (1 - gamma).
template <typename Scalar>
Vector<Scalar> transport_point_exact(const Vector<Scalar>& theta,
                                     const Vector<Scalar>& theta_prev,
                                     std::uint64_t t) {
  require_same_size(theta, theta_prev, "transport_point_exact");
  return theta + Scalar(t) * (theta - theta_prev);
}

}  // namespace igt

#endif  // IGT_SCHEDULES_HPP
