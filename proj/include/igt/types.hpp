#ifndef IGT_TYPES_HPP
#define IGT_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace igt {

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A point in parameter space.
using ParamVector = Vector<double>;

/// Raised when a caller breaks a protocol contract (e.g. a gradient measured
/// at a point other than the one the estimator asked for).
class contract_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!x.allFinite())
    throw std::domain_error(std::string(what) + ": non-finite entry");
}

template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A>& a,
                       const Eigen::MatrixBase<B>& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
}

}  // namespace igt

#endif  // IGT_TYPES_HPP
