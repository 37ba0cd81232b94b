#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "igt/dynamics.hpp"
#include "igt/noise_propagation.hpp"
#include "igt/rng.hpp"

using igt::ImpulseMethod;

namespace {

// Durand-Kerner roots of a monic polynomial with coefficients c[0..n-1]
// (x^n + c[0] x^{n-1} + ... + c[n-1]).
std::vector<std::complex<double>> dk_roots(const std::vector<double>& c) {
  const std::size_t n = c.size();
  std::vector<std::complex<double>> z(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(std::complex<double>(0.4, 0.9), double(k));
  auto eval = [&](std::complex<double> x) {
    std::complex<double> r = 1.0;
    for (double ck : c) r = r * x + ck;
    return r;
  };
  for (int it = 0; it < 2000; ++it) {
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) den *= z[k] - z[j];
      if (std::abs(den) > 0) z[k] -= eval(z[k]) / den;
    }
  }
  return z;
}

double brute_radius(const Eigen::Matrix3d& m) {
  const double tr = m.trace();
  const double c2 = 0.5 * (tr * tr - (m * m).trace());
  const double det = m.determinant();
  double r = 0;
  for (auto z : dk_roots({-tr, c2, -det})) r = std::max(r, std::abs(z));
  return r;
}

double brute_radius(const Eigen::Matrix2d& m) {
  double r = 0;
  for (auto z : dk_roots({-m.trace(), m.determinant()})) r = std::max(r, std::abs(z));
  return r;
}

// Independent per-coefficient recursion written out from its definition.
double hand_n(double alpha, double h, int i, int t) {
  double n = 0;
  for (int s = 1; s <= t; ++s) n = (1 - alpha * h) * n + (i < s ? 1.0 / s : 0.0);
  return n;
}

}  // namespace

TEST(NoiseCoeffs, HandValues) {
  const auto c = igt::igt_noise_coeffs(0.1, 1.0, 5);
  EXPECT_EQ(c.values(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(c.values(1, 2), 0.5);
  EXPECT_NEAR(c.values(1, 3), 0.9 * 0.5 + 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(c.values(1, 3), 0.78333, 1e-5);
  for (int i = 0; i < 5; ++i)
    for (int t = 0; t <= 5; ++t) EXPECT_NEAR(c.values(i, t), hand_n(0.1, 1.0, i, t), 1e-15);
}

TEST(NoiseCoeffs, MatchImpulseResponse) {
  const std::size_t T = 500;
  for (double h : {0.01, 1.0}) {
    for (double alpha : {0.01, 0.1, 1.0 / h}) {
      const auto c = igt::igt_noise_coeffs(alpha, h, T);
      for (std::size_t i = 0; i < T; i += (i < 20 ? 1 : 37)) {
        const auto r = igt::impulse_response(ImpulseMethod::igt(), alpha, h, i, T);
        for (std::size_t t = 0; t <= T; ++t)
          ASSERT_NEAR(c.values(Eigen::Index(i), Eigen::Index(t)), r[t], 1e-12)
              << alpha << " " << h << " " << i << " " << t;
      }
    }
  }
}

TEST(NoiseCoeffs, ZeroStartAndPositivity) {
  const std::size_t T = 300;
  const auto c = igt::igt_noise_coeffs(1.0, 0.7, T);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t t = 0; t <= T; ++t) {
      if (t <= i) {
        ASSERT_EQ(c.values(Eigen::Index(i), Eigen::Index(t)), 0.0);
      }
      ASSERT_GE(c.values(Eigen::Index(i), Eigen::Index(t)), 0.0);
    }
}

TEST(NoiseCoeffs, ConstantThenDecreasingBounds) {
  // alpha = 1/L with L = 1, r = 1 - alpha h.
  const std::size_t T = 10000;
  for (double h : {1.0, 0.5, 0.1, 0.01}) {
    const double alpha = 1.0, gap = alpha * h, r = 1.0 - gap;
    for (std::size_t i : {1u, 5u, 25u}) {
      const auto row = igt::igt_noise_row(alpha, h, i, T);
      const double lg = std::log(2.0 / (double(i) * gap));
      const double nu = std::max(1.0 + r, 2.0 * lg) / gap;
      for (std::size_t t = 0; t <= T; ++t) {
        if (t <= i) {
          ASSERT_EQ(row[t], 0.0);
          continue;
        }
        ASSERT_GE(row[t], 0.0);
        if (double(t) <= 2.0 / gap) {
          ASSERT_LE(row[t], lg) << h << " " << i << " " << t;
        }
        if (double(t) >= 2.0 / gap) {
          ASSERT_LE(row[t], nu / double(t)) << h << " " << i << " " << t;
        }
      }
    }
  }
}

TEST(Impulse, SgdClosedForm) {
  for (double alpha : {0.05, 0.3})
    for (double h : {0.5, 1.0}) {
      const std::size_t T = 200;
      for (std::size_t i : {0u, 3u, 50u}) {
        const auto r = igt::impulse_response(ImpulseMethod::sgd(), alpha, h, i, T);
        for (std::size_t t = 0; t <= T; ++t) {
          const double expect = t > i ? std::abs(std::pow(1 - alpha * h, double(t - 1 - i))) : 0.0;
          ASSERT_NEAR(r[t], expect, 1e-12);
        }
      }
    }
}

TEST(Impulse, FixedMomentumPeaksLate) {
  const auto r = igt::impulse_response(ImpulseMethod::momentum_fixed(0.9), 0.1, 1.0, 1, 200);
  const auto peak = std::max_element(r.begin(), r.end()) - r.begin();
  EXPECT_GT(peak, 2);
  EXPECT_LT(r[150], r[std::size_t(peak)]);
}

TEST(Impulse, RejectsLateImpulse) {
  EXPECT_THROW(igt::impulse_response(ImpulseMethod::igt(), 0.1, 1.0, 10, 10), std::invalid_argument);
}

TEST(Impulse, Names) {
  EXPECT_EQ(igt::to_string(ImpulseMethod::momentum_fixed(0.9)), "momentum-0.9");
  EXPECT_EQ(igt::to_string(ImpulseMethod::momentum_increasing()), "momentum-inc");
}

TEST(TotalVariance, ShapePerMethod) {
  const std::size_t T = 2000;
  const auto sgd = igt::total_noise_variance(ImpulseMethod::sgd(), 0.1, 1.0, T);
  for (std::size_t t = T / 2; t <= T; ++t) EXPECT_NEAR(sgd[t], sgd[T], 0.05 * sgd[T]);
  const auto mom = igt::total_noise_variance(ImpulseMethod::momentum_fixed(0.9), 0.1, 1.0, T);
  const double lo = *std::min_element(mom.begin() + T / 2, mom.end());
  EXPECT_GT(lo, 0.1 * mom[T]);
  const auto igt_total = igt::total_noise_variance(ImpulseMethod::igt(), 0.1, 1.0, T);
  EXPECT_NEAR(igt_total[T] * double(T), igt_total[T / 2] * double(T / 2),
              0.15 * igt_total[T] * double(T));
}

TEST(Dynamics, Structure) {
  const auto A = igt::bias_matrix(0.3, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(A(0, 0), 1 - 0.6 + 0.5);
  EXPECT_EQ(A(0, 1), -0.5);
  EXPECT_EQ(A(1, 0), 1.0);
  EXPECT_EQ(A(1, 1), 0.0);
  const auto D = igt::variance_matrix(0.3, 0.5, 2.0);
  const double a = 1 - 0.6 + 0.5;
  EXPECT_DOUBLE_EQ(D(0, 0), a * a + 2 * 0.09 * 4);
  EXPECT_DOUBLE_EQ(D(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(D(0, 2), -2 * 0.5 * a * a);
  EXPECT_EQ(D.row(1), Eigen::RowVector3d(1, 0, 0));
  EXPECT_DOUBLE_EQ(D(2, 0), a);
  EXPECT_EQ(D(2, 1), 0.0);
  EXPECT_EQ(D(2, 2), -0.5);
}

TEST(Dynamics, Examples) {
  const auto A = igt::bias_matrix(1.0, 0.0, 1.0);
  EXPECT_EQ(A, (Eigen::Matrix2d() << 0, 0, 1, 0).finished());
  EXPECT_EQ(igt::spectral_radius(A), 0.0);
  const auto D = igt::variance_matrix(1.0, 0.0, 1.0);
  EXPECT_EQ(D(0, 0), 2.0);
  EXPECT_NEAR(igt::spectral_radius(D), 2.0, 1e-12);
}

TEST(Dynamics, OptimalTuningRadiusIsRootMu) {
  const double rm = 9.0 / 11.0, mu = rm * rm, alpha = (1 + rm) * (1 + rm);
  for (double h : {0.01, 0.1, 1.0, 0.05, 0.5})
    EXPECT_NEAR(igt::spectral_radius(igt::bias_matrix(alpha, mu, h)), rm, 1e-6) << h;
}

TEST(Dynamics, RadiusMatchesPolynomialRoots) {
  igt::Rng rng = igt::make_rng({2024});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double alpha = 2.0 * u(rng), mu = 0.999 * u(rng), h = 0.001 + 2.0 * u(rng);
    const auto A = igt::bias_matrix(alpha, mu, h);
    const auto D = igt::variance_matrix(alpha, mu, h);
    EXPECT_NEAR(igt::spectral_radius(A), brute_radius(A), 1e-9) << alpha << " " << mu << " " << h;
    EXPECT_NEAR(igt::spectral_radius(D), brute_radius(D),
                1e-9 * std::max(1.0, brute_radius(D)))
        << alpha << " " << mu << " " << h;
  }
}

TEST(Dynamics, SweepRequiresSmallStep) {
  Eigen::VectorXd eigs(2);
  eigs << 0.1, 1.0;
  EXPECT_THROW(igt::find_stable_momentum(0.7, eigs), std::invalid_argument);
  const auto grid = igt::default_momentum_grid();
  EXPECT_EQ(grid.size(), 99u);
  EXPECT_GT(grid.front(), 0.0);
  EXPECT_LT(grid.back(), 1.0);
}
