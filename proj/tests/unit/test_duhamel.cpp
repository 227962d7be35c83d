#include <gtest/gtest.h>

#include <hardyheat/duhamel.hpp>

#include <random>

using namespace hardyheat;

namespace {
const double ks = kappa_star(2, 1.0);

const PerturbedKernel& kernel(double f) {
  static std::map<double, std::unique_ptr<PerturbedKernel>> m;
  auto& k = m[f];
  if (!k) k = std::make_unique<PerturbedKernel>(ModelParams::from_kappa(2, 1.0, f * ks));
  return *k;
}
}  // namespace

TEST(Duhamel, ZeroCouplingIsFreeKernel) {
  const PerturbedKernel& K = kernel(0.0);
  const Vec x{1.0, 0.0}, y{-1.0, 0.0};
  const SeriesState s = K.tilde_p(1.0, x, y);
  ASSERT_EQ(s.terms.size(), 1u);
  EXPECT_DOUBLE_EQ(s.sum, cauchy_kernel(2, 1.0, 2.0));
  EXPECT_EQ(K.table(), nullptr);
}

TEST(Duhamel, SeriesAgreesWithFixedPoint) {
  const PerturbedKernel& K = kernel(0.5);
  for (auto [x, y] : {std::pair{Vec{1.0, 0.0}, Vec{0.0, 0.5}}, std::pair{Vec{0.2, 0.1}, Vec{-2.0, 1.0}}}) {
    const SeriesState s = K.tilde_p(1.0, x, y);
    const KernelValue fp = K.tilde_p_fixed_point(1.0, x, y);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.sum / fp.value, 1.0, 1e-3);
  }
}

TEST(Duhamel, Symmetry) {
  std::mt19937_64 g(21);
  std::normal_distribution<double> N;
  const PerturbedKernel& K = kernel(0.5);
  for (int i = 0; i < 10; ++i) {
    const Vec x{N(g), N(g)}, y{N(g), N(g)};
    const double a = K.tilde_p_fixed_point(1.0, x, y).value, b = K.tilde_p_fixed_point(1.0, y, x).value;
    EXPECT_NEAR(a / b, 1.0, 1e-3);
  }
}

TEST(Duhamel, RotationInvariance) {
  const PerturbedKernel& K = kernel(0.5);
  const Vec x{0.6, 0.0}, y{0.0, 1.1};
  const double c = std::cos(0.7), s = std::sin(0.7);
  const Vec xr{c * x[0] - s * x[1], s * x[0] + c * x[1]}, yr{c * y[0] - s * y[1], s * y[0] + c * y[1]};
  EXPECT_NEAR(K.tilde_p_fixed_point(1.0, x, y).value / K.tilde_p_fixed_point(1.0, xr, yr).value, 1.0, 1e-10);
}

TEST(Duhamel, MonotoneInCoupling) {
  // all terms of the series are positive, so p <= p~ and p~ increases with kappa
  const Vec x{0.3, 0.0}, y{0.0, 0.8};
  double prev = kernel(0.0).free_value(1.0, x, y);
  for (double f : {0.1, 0.5, 1.0}) {
    const double v = kernel(f).tilde_p_fixed_point(1.0, x, y).value;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Duhamel, TermsArePositiveAndDecay) {
  const SeriesState s = kernel(0.5).tilde_p(1.0, Vec{1.0, 0.0}, Vec{0.0, 1.0});
  for (std::size_t n = 0; n < s.terms.size(); ++n) EXPECT_GT(s.terms[n], 0.0);
  for (std::size_t n = 2; n < s.terms.size(); ++n) EXPECT_LT(s.terms[n], s.terms[n - 1]);
}

TEST(Duhamel, ResidualOfFixedPointIsSmall) {
  const PerturbedKernel& K = kernel(0.5);
  const Vec x{0.8, 0.0}, y{0.0, 0.6};
  const double direct = K.tilde_p_direct(1.0, x, y).value, tab = K.tilde_p_fixed_point(1.0, x, y).value;
  EXPECT_NEAR(direct / tab, 1.0, 1e-3);
}

TEST(Duhamel, SupercriticalSeriesThrows) {
  EXPECT_THROW(PerturbedKernel(ModelParams::from_kappa(2, 1.0, 1.05 * ks)).tilde_p(1.0, Vec{1.0, 0.0}, Vec{0.0, 1.0}),
               DomainError);
}
