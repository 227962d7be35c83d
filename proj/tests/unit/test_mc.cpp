#include <gtest/gtest.h>

#include <hardyheat/mc.hpp>
#include <hardyheat/stable_kernel.hpp>

using namespace hardyheat;

namespace {
McConfig small(long n = 20000, std::uint64_t seed = 3) {
  McConfig c;
  c.n_paths = n;
  c.seed = seed;
  return c;
}
}  // namespace

TEST(MonteCarlo, SameSeedSameEstimate) {
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.1);
  const McEstimate a = feynman_kac({0.5, 0.0}, 1.0, 0.2, mp, small(5000)), b = feynman_kac({0.5, 0.0}, 1.0, 0.2, mp, small(5000));
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  const McEstimate c = feynman_kac({0.5, 0.0}, 1.0, 0.2, mp, small(5000, 4));
  EXPECT_NE(a.mean, c.mean);
}

TEST(MonteCarlo, ZeroCouplingUnitWeight) {
  const McEstimate e = feynman_kac({1.0, 0.0}, 1.0, 0.0, ModelParams::from_kappa(2, 1.0, 0.0), small(1000));
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.capped_fraction, 0.0);
}

TEST(MonteCarlo, FreeWeightedMassWithinError) {
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.0);
  for (double r : {0.3, 2.0}) {
    const McEstimate e = feynman_kac({r, 0.0}, 1.0, 0.5, mp, small());
    const double exact = weighted_mass(1.0, Vec{r, 0.0}, 0.5, 1.0).value;
    EXPECT_LT(std::abs(e.mean - exact), 4.0 * e.std_error) << "r=" << r;
  }
}

TEST(MonteCarlo, InvarianceDefectCentred) {
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.5 * kappa_star(2, 1.0));
  const McEstimate e = fk_invariance_defect({1.0, 0.0}, 1.0, mp.delta, mp, small());
  EXPECT_LT(std::abs(e.mean), 4.0 * e.std_error);
}

TEST(MonteCarlo, StableSamplerScaling) {
  // |X_t| for the free process has median t^{1/alpha} times that at t = 1
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.0);
  const McEstimate a = feynman_kac({1e-9, 0.0}, 1.0, 0.5, mp, small());
  const McEstimate b = feynman_kac({1e-9, 0.0}, 4.0, 0.5, mp, small());
  EXPECT_NEAR(b.mean / a.mean, std::pow(4.0, -0.5), 5.0 * (a.std_error / a.mean + b.std_error / b.mean));
}

TEST(MonteCarlo, DomainErrors) {
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.1);
  EXPECT_THROW(feynman_kac({0.0, 0.0}, 1.0, 0.1, mp), DomainError);
  EXPECT_THROW(feynman_kac({1.0, 0.0, 0.0}, 1.0, 0.1, mp), DomainError);
  EXPECT_THROW(feynman_kac({1.0, 0.0}, 1.0, 1.0, mp), DomainError);
  EXPECT_THROW(feynman_kac({1.0, 0.0}, 1.0, 0.1, ModelParams::from_kappa(2, 1.0, 1.0)), DomainError);
  McConfig c;
  c.n_paths = 0;
  EXPECT_THROW(feynman_kac({1.0, 0.0}, 1.0, 0.1, mp, c), DomainError);
}
