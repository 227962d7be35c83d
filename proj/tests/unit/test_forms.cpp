#include <gtest/gtest.h>

#include <hardyheat/forms.hpp>

using namespace hardyheat;

TEST(Forms, GaussianEnergyBothRoutes) {
  const double exact = std::pow(pi, 1.5) / 2.0;
  const TestFunction g = TestFunction::gaussian(0.0, 0.0, 1.0);
  EXPECT_NEAR(energy_fourier(g, 1.0).value, exact, 1e-12);
  const FormValue d = energy_direct(g, 1.0);
  EXPECT_NEAR(d.value, exact, 1e-5);
  EXPECT_EQ(d.route, FormRoute::DirectDouble);
}

TEST(Forms, DilationScaling) {
  // E[f(./s)] = s^{2 - alpha} E[f] in the plane
  for (double a : {0.6, 1.0, 1.4}) {
    const double e1 = energy_direct(TestFunction::bump(0.0, 0.0, 1.0), a).value;
    const double e2 = energy_direct(TestFunction::bump(0.0, 0.0, 2.5), a).value;
    EXPECT_NEAR(e2 / e1, std::pow(2.5, 2.0 - a), 1e-5) << "alpha=" << a;
  }
}

TEST(Forms, TranslationInvariance) {
  const double e0 = energy_direct(TestFunction::gaussian(0.0, 0.0, 0.7), 1.0).value;
  const double e1 = energy_direct(TestFunction::gaussian(1.3, -0.4, 0.7), 1.0).value;
  EXPECT_NEAR(e1 / e0, 1.0, 1e-6);
}

TEST(Forms, ProductRoutesAgree) {
  const TestFunction p = TestFunction::product(0.2, -0.1, 0.5, 1.5);
  EXPECT_NEAR(energy_direct(p, 1.0).value / energy_fourier(p, 1.0).value, 1.0, 1e-5);
}

TEST(Forms, FractionalLaplacianMatchesFourier) {
  const TestFunction g = TestFunction::gaussian(0.0, 0.0, 1.0);
  for (double x : {0.0, 0.5, 2.0}) {
    const double v = frac_laplacian(g, x, 0.3, 1.0).value;
    EXPECT_NEAR(v, frac_laplacian_fourier(g, x, 0.3, 1.0), 1e-8 * std::max(1.0, std::abs(v)));
  }
}

TEST(Forms, HardyGapNonNegativeOnGaussians) {
  for (double s : {0.3, 1.0, 3.0})
    for (double c : {0.0, 0.5, 2.0}) {
      const CheckResult r = check_hardy(TestFunction::gaussian(c, 0.0, s), 1.0);
      EXPECT_NE(r.status, Status::Fail);
      EXPECT_GT(r.value("gap"), 0.0);
    }
}

TEST(Forms, BarEnergyAtZeroCouplingIsEnergy) {
  const TestFunction f = TestFunction::bump(0.3, 0.2, 1.0);
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, 0.0);
  EXPECT_NEAR(bar_energy(f, mp).value / energy_direct(f, 1.0).value, 1.0, 1e-12);
}

TEST(Forms, IdentityAtCriticalCoupling) {
  const ModelParams mp = ModelParams::from_kappa(2, 1.0, kappa_star(2, 1.0));
  EXPECT_EQ(check_form_identity(TestFunction::bump(0.0, 0.0, 1.0), mp).status, Status::Pass);
}

TEST(Forms, NearOptimizerGapFalls) {
  const CheckResult r = near_optimizer_gaps(1.0);
  EXPECT_EQ(r.status, Status::Pass);
  EXPECT_GT(r.value("gap_n8"), 0.0);
}

TEST(Forms, Errors) {
  EXPECT_THROW(energy_fourier(TestFunction::bump(0.0, 0.0, 1.0), 1.0), DomainError);
  EXPECT_THROW(TestFunction::near_optimizer(1.0, 0.5), DomainError);
  EXPECT_THROW(check_form_identity(TestFunction::gaussian(0, 0, 1), ModelParams::from_kappa(3, 1.0, 0.1)), DomainError);
}
