#include <gtest/gtest.h>

#include <hardyheat/params.hpp>

#include <random>

using namespace hardyheat;

TEST(Params, KappaStarClosedForms) {
  EXPECT_NEAR(kappa_star(3, 1.0), 2.0 / pi, 1e-14);
  EXPECT_NEAR(kappa_of_beta(3, 1.0, 0.5), 0.5, 1e-14);
  // alpha -> 2 recovers the classical Hardy constant (d-2)^2/4 from below
  EXPECT_NEAR(kappa_star(5, 1.999999), 2.25, 1e-4);
}

TEST(Params, CurvePeakIsKappaStar) {
  for (int d : {2, 3, 4})
    for (double a : {0.5, 1.0, 1.5}) {
      if (!(a < d)) continue;
      EXPECT_NEAR(kappa_of_beta(d, a, delta_star(d, a)), kappa_star(d, a), 1e-12 * kappa_star(d, a));
    }
}

TEST(Params, BetaToKappaSymmetry) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int d = 2 + static_cast<int>(3 * U(g));
    const double a = 0.05 + 1.9 * U(g);
    const double b = (d - a) * (0.01 + 0.98 * U(g));
    EXPECT_NEAR(kappa_of_beta(d, a, b), kappa_of_beta(d, a, d - a - b), 1e-11 * kappa_star(d, a));
  }
}

TEST(Params, DeltaInvertsKappa) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const int d = 2 + static_cast<int>(2 * U(g));
    const double a = 0.1 + 1.8 * U(g);
    const double delta = delta_star(d, a) * (0.02 + 0.96 * U(g));
    const double k = kappa_of_beta(d, a, delta);
    EXPECT_NEAR(delta_of_kappa(d, a, k), delta, 1e-10);
    const ModelParams mp = ModelParams::from_delta(d, a, delta);
    EXPECT_EQ(mp.regime, Regime::Subcritical);
    EXPECT_NEAR(ModelParams::from_kappa(d, a, mp.kappa).delta, delta, 1e-10);
  }
}

TEST(Params, Regimes) {
  const double ks = kappa_star(2, 1.0);
  EXPECT_EQ(ModelParams::from_kappa(2, 1.0, 0.0).delta, 0.0);
  EXPECT_EQ(ModelParams::from_kappa(2, 1.0, ks).regime, Regime::Critical);
  EXPECT_EQ(ModelParams::from_kappa(2, 1.0, ks).delta, 0.5);
  EXPECT_EQ(ModelParams::from_kappa(2, 1.0, ks * (1 + 1e-14)).regime, Regime::Critical);
  const ModelParams sup = ModelParams::from_kappa(2, 1.0, 1.05 * ks);
  EXPECT_EQ(sup.regime, Regime::Supercritical);
  EXPECT_TRUE(std::isnan(sup.delta));
  EXPECT_EQ(sup.closure_delta(), 0.5);
  EXPECT_EQ(ModelParams::from_delta(2, 1.0, 0.5).regime, Regime::Critical);
}

TEST(Params, DomainErrors) {
  EXPECT_THROW(kappa_star(1, 1.0), DomainError);
  EXPECT_THROW(kappa_star(2, 2.0), DomainError);
  EXPECT_THROW(kappa_star(2, 0.0), DomainError);
  EXPECT_THROW(kappa_of_beta(2, 1.0, -0.1), DomainError);
  EXPECT_THROW(kappa_of_beta(2, 1.0, 1.0), DomainError);
  EXPECT_THROW(ModelParams::from_kappa(2, 1.0, -1.0), DomainError);
  EXPECT_THROW(ModelParams::from_delta(2, 1.0, 0.6), DomainError);
  EXPECT_THROW(kappa_curve(2, 1.0, 2), DomainError);
}

TEST(Params, CurveShape) {
  const auto c = kappa_curve(3, 1.0, 101);
  ASSERT_EQ(c.size(), 101u);
  EXPECT_EQ(c.front().second, 0.0);
  EXPECT_EQ(c.back().second, 0.0);
  EXPECT_EQ(c.back().first, 2.0);
  for (std::size_t i = 1; i <= 50; ++i) EXPECT_GT(c[i].second, c[i - 1].second);
  for (std::size_t i = 51; i < c.size(); ++i) EXPECT_LT(c[i].second, c[i - 1].second);
}

TEST(Params, HFunction) {
  const ModelParams mp = ModelParams::from_delta(2, 1.0, 0.25);
  EXPECT_NEAR(mp.H(1.0, 1.0), 2.0, 1e-15);
  // H(t, x) depends on t^{1/alpha}/|x| only
  EXPECT_NEAR(mp.H(4.0, 2.0), mp.H(1.0, 0.5), 1e-14);
}
