#include <gtest/gtest.h>

#include <hardyheat/stable_kernel.hpp>

#include <random>

using namespace hardyheat;

TEST(StableKernel, FourierMatchesCauchy) {
  for (int d : {2, 3})
    for (double r : {0.0, 1e-3, 0.3, 1.0, 2.5, 10.0})
      EXPECT_NEAR(hankel_p1(d, 1.0, r).value / cauchy_kernel(d, 1.0, r), 1.0, 1e-9) << "d=" << d << " r=" << r;
}

TEST(StableKernel, TableMatchesInversion) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(-3.0, 1.5);
  for (double a : {0.7, 1.5}) {
    const FreeKernel fk(2, a);
    for (int i = 0; i < 20; ++i) {
      const double r = std::pow(10.0, U(g));
      const KernelValue h = hankel_p1(2, a, r);
      EXPECT_NEAR(fk.p1(r) / h.value, 1.0, 1e-8) << "alpha=" << a << " r=" << r;
    }
  }
}

TEST(StableKernel, LargeRadiusExpansionAgrees) {
  // alpha < 1: the expansion converges; compare at moderate r against the inversion
  const auto s = large_r_series_p1(2, 0.7, 6.0);
  EXPECT_NEAR(s.first / hankel_p1(2, 0.7, 6.0).value, 1.0, 1e-7);
}

TEST(StableKernel, ScalingProperty) {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double a : {1.0, 1.5}) {
    for (int i = 0; i < 20; ++i) {
      const double t = std::pow(10.0, -1.0 + 2.0 * U(g));
      const Vec x{std::pow(10.0, -1.0 + 2.0 * U(g)), 0.3 * U(g)};
      const double s = std::pow(t, -1.0 / a);
      const double lhs = free_kernel(t, x, a).value;
      const double rhs = s * s * free_kernel(1.0, {x[0] * s, x[1] * s}, a).value;
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-9);
    }
  }
}

TEST(StableKernel, PositiveAndRadiallyDecreasing) {
  const FreeKernel fk(3, 1.3);
  double prev = INFINITY;
  for (double r = 1e-4; r < 1e4; r *= 1.3) {
    const double v = fk.p1(r);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(StableKernel, TailMatchesLevyDensity) {
  // p_t(x) ~ t nu(x) as |x| -> infinity
  const Vec x{300.0, 0.0};
  EXPECT_NEAR(free_kernel(1.0, x, 1.5).value / levy_density(x, 1.5), 1.0, 1e-3);
  EXPECT_LT(free_kernel_bound_ratio(1.0, x, 1.5), 1.01);
}

TEST(StableKernel, NormalizerQuadratureMatchesClosedForm) {
  for (double a : {1.0, 1.5})
    for (double b : {0.3, 0.5, 1.2}) EXPECT_NEAR(normalizer_c1(2, a, b) / normalizer_c1_closed(2, a, b), 1.0, 1e-8);
}

TEST(StableKernel, WeightedMassLimits) {
  EXPECT_EQ(weighted_mass(1.0, Vec{1.0, 0.0}, 0.0, 1.0).value, 1.0);
  // far from the origin |y|^{-beta} is nearly constant over the kernel's bulk
  const double r = 1e4, v = weighted_mass(1.0, Vec{r, 0.0}, 0.5, 1.0).value;
  EXPECT_NEAR(v * std::sqrt(r), 1.0, 1e-3);
}

TEST(StableKernel, FreeIdentity) {
  for (double b : {0.2, 0.6})
    for (double r : {0.05, 2.0}) {
      const Vec x{r, 0.0};
      const double lhs = kappa_of_beta(2, 1.0, b) * time_integrated_mass(0.7, x, b + 1.0, 1.0) + weighted_mass(0.7, x, b, 1.0).value;
      EXPECT_NEAR(lhs * std::pow(r, b), 1.0, 1e-6);
    }
  EXPECT_LT(std::abs(log_identity_residual(1.0, Vec{0.5, 0.0}, 1.0)), 1e-6);
}

TEST(StableKernel, Errors) {
  EXPECT_THROW(free_kernel(0.0, Vec{1.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(free_kernel(1.0, Vec{1.0}, 1.0), DomainError);
  EXPECT_THROW(weighted_mass(1.0, Vec{1.0, 0.0}, 2.0, 1.0), DomainError);
  EXPECT_THROW(time_integrated_mass(1.0, Vec{0.0, 0.0}, 1.5, 1.0), DomainError);
}
