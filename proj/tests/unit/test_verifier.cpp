#include <gtest/gtest.h>

#include <hardyheat/verifier.hpp>

#include <random>

using namespace hardyheat;

namespace {
const double ks = kappa_star(2, 1.0);
}

TEST(Verifier, CheckResultStatus) {
  EXPECT_EQ(CheckResult("a", 0.5, 1.0).status, Status::Pass);
  EXPECT_EQ(CheckResult("a", 1.0, 1.0).status, Status::Pass);
  EXPECT_EQ(CheckResult("a", 1.5, 1.0).status, Status::Fail);
  EXPECT_EQ(CheckResult("a", NAN, 1.0).status, Status::Fail);
  CheckResult r("a", 0.0, 1.0);
  r.with("x", 2.0);
  EXPECT_EQ(r.value("x"), 2.0);
  EXPECT_TRUE(std::isnan(r.value("y")));
}

TEST(Verifier, ChapmanKolmogorov) {
  const PerturbedKernel K0(ModelParams::from_kappa(2, 1.0, 0.0));
  const CheckResult free = check_chapman_kolmogorov(0.5, 0.5, {1.0, 0.0}, {0.0, 1.0}, K0);
  EXPECT_EQ(free.status, Status::Pass);
  EXPECT_LT(free.defect, 1e-6);
  const PerturbedKernel K(ModelParams::from_kappa(2, 1.0, 0.5 * ks));
  EXPECT_EQ(check_chapman_kolmogorov(0.3, 0.7, {0.5, 0.0}, {0.0, 0.8}, K).status, Status::Pass);
}

TEST(Verifier, ChapmanKolmogorovFreeRandomTriples) {
  const PerturbedKernel K0(ModelParams::from_kappa(2, 1.0, 0.0));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> time(0.2, 2.0), coord(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    const double s = time(rng), t = time(rng);
    const Vec x{coord(rng), coord(rng)}, y{coord(rng), coord(rng)};
    EXPECT_LT(check_chapman_kolmogorov(s, t, x, y, K0).defect, 1e-6) << "triple " << k;
  }
}

TEST(Verifier, InvarianceDeterministic) {
  WeightedBank bank(ModelParams::from_kappa(2, 1.0, 0.5 * ks));
  const double delta = bank.params().delta;
  const CheckResult r = check_invariance(delta, 1.0, {1.0, 0.0}, bank);
  EXPECT_EQ(r.status, Status::Pass);
  EXPECT_LT(r.defect, 1e-4);
  EXPECT_THROW(check_invariance(1.0 - delta, 1.0, {1.0, 0.0}, bank), DomainError);
}

TEST(Verifier, Supermedian) {
  WeightedBank bank(ModelParams::from_kappa(2, 1.0, 0.5 * ks));
  EXPECT_EQ(check_supermedian(2.0, {0.4, 0.0}, bank).status, Status::Pass);
  const CheckResult H = check_H_supermedian(bank, 7);
  EXPECT_EQ(H.status, Status::Pass);
  EXPECT_GT(H.value("M"), 0.0);
}

TEST(Verifier, SlopeAtCritical) {
  const PerturbedKernel K(ModelParams::from_kappa(2, 1.0, ks));
  EXPECT_NEAR(delta_slope(K, {1.0, 0.0}).slope, -0.5, 0.02);
}

TEST(Verifier, BlowupGuardAtCritical) {
  const BlowupReport b = blowup_probe(1.0, {0.5, 0.0}, {0.0, 0.5}, ModelParams::from_kappa(2, 1.0, ks));
  EXPECT_EQ(b.outcome, "guard");
  EXPECT_TRUE(b.partial_sums.empty());
}

TEST(Verifier, Scaling) {
  const PerturbedKernel K(ModelParams::from_kappa(2, 1.0, 0.5 * ks));
  EXPECT_EQ(check_scaling(K, 5).status, Status::Pass);
}

TEST(Verifier, BudgetExpires) {
  const Budget b(1e-9);
  std::this_thread::sleep_for(std::chrono::milliseconds(2));
  EXPECT_THROW(b.check("test"), BudgetExceeded);
  EXPECT_NO_THROW(Budget().check("test"));
}
