// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
// Usage: acceptance <path to hardyheat CLI> <scratch dir>

#include <hardyheat/hardyheat.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace hardyheat;

namespace {

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds, 0 = none
  std::function<bool(std::vector<std::string>&)> body;
};

std::string fmtd(double v) { return format_number(v, 6); }

void note(std::vector<std::string>& log, const std::string& s) { log.push_back(s); }

bool record(std::vector<std::string>& log, const CheckResult& r) {
  std::ostringstream os;
  os << to_string(r.status) << "  " << r.name << "  defect=" << fmtd(r.defect) << " tol=" << fmtd(r.tolerance);
  for (const auto& [k, v] : r.values) os << " " << k << "=" << fmtd(v);
  log.push_back(os.str());
  return r.status != Status::Fail;
}

bool within(std::vector<std::string>& log, const std::string& what, double err, double tol) {
  const bool ok = err <= tol;
  log.push_back(std::string(ok ? "pass" : "fail") + "  " + what + "  err=" + fmtd(err) + " tol=" + fmtd(tol));
  return ok;
}

// ---- criterion 2 oracles, independent of the library's kernel code

/// int_{R^2} (1 - cos(xi . y)) nu(y) dy for |xi| = k; the angular mean of cos is J0(k rho).
double levy_symbol_d2(double alpha, double k) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double A = levy_constant(2, alpha), c = 2.0 * pi * A;
  auto f = [&](double rho) { return c * (1.0 - std::cyl_bessel_j(0.0, k * rho)) * std::pow(rho, -1.0 - alpha); };
  const double r0 = 1e-6 / k, r1 = pi / k, rmax = 4000.0 * pi / k;
  // 1 - J0(z) = z^2/4 - z^4/64 near 0
  double I = c * k * k * std::pow(r0, 2.0 - alpha) / (4.0 * (2.0 - alpha));
  auto g = [&](double w) {
    const double rho = std::exp(w);
    return f(rho) * rho;
  };
  I += GK::integrate(g, std::log(r0), std::log(r1), 10, 1e-14);
  for (double a = r1; a < rmax - 0.5 * r1; a += r1) I += GK::integrate(f, a, a + r1, 0, 0.0);
  // tail: the J0 part is O(rmax^{-alpha-3/2}) and dropped
  I += c * std::pow(rmax, -alpha) / alpha;
  return I;
}

/// int_{R^2} p_1 by radial quadrature of the tabulated kernel with the nu tail.
double mass_d2(const FreeKernel& fk) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double alpha = fk.alpha(), R = 1e6, r0 = 1e-8;
  auto g = [&](double w) {
    const double r = std::exp(w);
    return 2.0 * pi * r * r * fk.p1(r);
  };
  double I = pi * r0 * r0 * fk.p1_at_zero();
  for (double w = std::log(r0); w < std::log(R) - 1e-9; w += std::log(10.0)) I += GK::integrate(g, w, w + std::log(10.0), 8, 1e-14);
  I += 2.0 * pi * levy_constant(2, alpha) * std::pow(R, -alpha) / alpha;
  return I;
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "hardyheat";
  const std::string scratch = argc > 2 ? argv[2] : ".";

  const int d = 2;
  const double alpha = 1.0, ks = kappa_star(d, alpha);
  McConfig mc;  // 1e5 paths
  const Vec e1{1.0, 0.0};

  std::vector<Criterion> cs;

  cs.push_back({1, "coupling constants and the kappa curve", 1.0, [&](auto& log) {
    bool ok = within(log, "kappa*(3,1) = 2/pi", std::abs(kappa_star(3, 1.0) - 2.0 / pi), 1e-12);
    ok &= within(log, "kappa_0.5(3,1) = 0.5", std::abs(kappa_of_beta(3, 1.0, 0.5) - 0.5), 1e-12);
    for (auto [dd, aa] : {std::pair{2, 1.0}, std::pair{3, 1.0}, std::pair{3, 1.5}, std::pair{2, 0.5}}) {
      const auto c = kappa_curve(dd, aa, 201);
      double asym = 0.0;
      bool mono = true;
      for (std::size_t i = 0; i < c.size(); ++i) {
        asym = std::max(asym, std::abs(c[i].second - c[c.size() - 1 - i].second) / kappa_star(dd, aa));
        if (2 * i + 1 < c.size() && i > 0) mono = mono && c[i].second > c[i - 1].second;
      }
      ok &= within(log, "curve symmetry d=" + std::to_string(dd) + " alpha=" + fmtd(aa), asym, 1e-12);
      ok &= within(log, "curve increasing on [0, delta*] d=" + std::to_string(dd) + " alpha=" + fmtd(aa), mono ? 0.0 : 1.0, 0.0);
      ok &= within(log, "curve peak is kappa*", std::abs(c[100].second - kappa_star(dd, aa)) / kappa_star(dd, aa), 1e-12);
    }
    return ok;
  }});

  cs.push_back({2, "free kernel: Fourier inversion, normalisation, Levy symbol", 30.0, [&](auto& log) {
    bool ok = true;
    for (int dd : {2, 3}) {
      double worst = 0.0;
      for (int i = 0; i < 50; ++i) {
        const double r = 1e-3 * std::pow(10.0, 4.5 * i / 49.0);
        const double exact = cauchy_kernel(dd, 1.0, r);
        worst = std::max(worst, std::abs(hankel_p1(dd, 1.0, r).value - exact) / exact);
      }
      ok &= within(log, "Fourier vs Cauchy, 50 radii in [1e-3, 10^1.5], d=" + std::to_string(dd), worst, 1e-8);
    }
    for (double aa : {1.0, 1.5, 0.7}) {
      const double m = mass_d2(*FreeKernel::get(2, aa));
      ok &= within(log, "int p_1 = 1, d=2 alpha=" + fmtd(aa), std::abs(m - 1.0), 1e-8);
    }
    for (double aa : {1.0, 1.5}) {
      double worst = 0.0;
      for (double k : {0.1, 0.5, 1.0, 2.0, 10.0})
        worst = std::max(worst, std::abs(levy_symbol_d2(aa, k) - std::pow(k, aa)) / std::pow(k, aa));
      ok &= within(log, "Levy symbol at 5 frequencies, alpha=" + fmtd(aa), worst, 1e-6);
    }
    return ok;
  }});

  cs.push_back({3, "invariance of h: deterministic < 0.5%, Monte Carlo within 3 SE", 300.0, [&](auto& log) {
    bool ok = true;
    for (double f : {0.1, 1.0}) {
      WeightedBank bank(ModelParams::from_kappa(d, alpha, f * ks));
      const double delta = bank.params().delta;
      for (double r : {0.1, 1.0, 10.0}) {
        CheckResult c = check_invariance(delta, 1.0, {r, 0.0}, bank, &mc, 5e-3);
        c.name += " kappa=" + fmtd(f) + "kappa* |x|=" + fmtd(r);
        ok &= record(log, c);
      }
    }
    return ok;
  }});

  cs.push_back({4, "corrected identity for beta in {0.25 delta, 1.5 delta}: defect < 1%", 300.0, [&](auto& log) {
    bool ok = true;
    for (double f : {0.1, 0.5}) {
      WeightedBank bank(ModelParams::from_kappa(d, alpha, f * ks));
      const double delta = bank.params().delta;
      for (double b : {0.25 * delta, 1.5 * delta})
        for (double r : {0.1, 1.0, 10.0}) {
          CheckResult c = check_invariance(b, 1.0, {r, 0.0}, bank, nullptr, 1e-2);
          c.name += " kappa=" + fmtd(f) + "kappa* beta=" + fmtd(b) + " |x|=" + fmtd(r);
          ok &= record(log, c);
        }
    }
    return ok;
  }});

  cs.push_back({5, "free identities: kappa = 0 invariance and the logarithmic residual < 1e-4", 60.0, [&](auto& log) {
    bool ok = true;
    for (int dd : {2, 3}) {
      double worst = 0.0, worst_log = 0.0;
      for (double b : {0.0, 0.25, 0.5, 0.75, 0.95 * (dd - alpha)})
        for (double r : {0.1, 1.0, 10.0}) {
          Vec x(dd, 0.0);
          x[0] = r;
          const double kb = kappa_of_beta(dd, alpha, b);
          double lhs = weighted_mass(1.0, x, b, alpha).value;
          if (b > 0.0) lhs += kb * time_integrated_mass(1.0, x, b + alpha, alpha);
          worst = std::max(worst, std::abs(lhs - std::pow(r, -b)) / std::pow(r, -b));
        }
      for (double r : {0.1, 1.0, 10.0}) {
        Vec x(dd, 0.0);
        x[0] = r;
        worst_log = std::max(worst_log, std::abs(log_identity_residual(1.0, x, alpha)));
      }
      ok &= within(log, "kappa = 0 identity, d=" + std::to_string(dd), worst, 1e-4);
      ok &= within(log, "log residual, d=" + std::to_string(dd), worst_log, 1e-4);
    }
    return ok;
  }});

  cs.push_back({6, "supermedian h and H: no violation beyond 3 errors, M drift < 10%", 0.0, [&](auto& log) {
    bool ok = true;
    for (double f : {0.5, 1.0}) {
      WeightedBank bank(ModelParams::from_kappa(d, alpha, f * ks));
      for (double r : {0.1, 1.0, 10.0}) {
        for (double t : {0.5, 1.0, 4.0}) {
          CheckResult c = check_supermedian(t, {r, 0.0}, bank, t == 1.0 ? &mc : nullptr);
          c.name += " kappa=" + fmtd(f) + "kappa* t=" + fmtd(t) + " |x|=" + fmtd(r);
          ok &= record(log, c);
        }
      }
      CheckResult h = check_H_supermedian(bank);
      h.name += " kappa=" + fmtd(f) + "kappa*";
      ok &= record(log, h);
    }
    return ok;
  }});

  cs.push_back({7, "two-sided estimate: finite constants, drift < 10%, slope -delta +/- 0.02", 900.0, [&](auto& log) {
    bool ok = true;
    for (double f : {0.5, 1.0}) {
      PerturbedKernel K(ModelParams::from_kappa(d, alpha, f * ks));
      const RatioReport rep = bounds_scan(K);
      const std::string tag = " kappa=" + fmtd(f) + "kappa*";
      const bool finite = std::isfinite(rep.c_lower) && std::isfinite(rep.c_upper) && rep.c_lower > 0.0;
      ok &= within(log, "c_lower=" + fmtd(rep.c_lower) + " c_upper=" + fmtd(rep.c_upper) + " finite" + tag, finite ? 0.0 : 1.0, 0.0);
      ok &= within(log, "refinement drift" + tag, rep.refinement_drift, 0.1);
      note(log, "info  scaling collapse" + tag + " = " + fmtd(rep.scaling_collapse));
      const SlopeFit s = delta_slope(K, e1);
      ok &= within(log, "slope=" + fmtd(s.slope) + " vs -delta=" + fmtd(-K.params().delta) + tag,
                   std::abs(s.slope + K.params().delta), 0.02);
    }
    return ok;
  }});

  cs.push_back({8, "scaling on 20 random points", 0.0, [&](auto& log) {
    bool ok = true;
    for (double f : {0.5, 1.0}) {
      CheckResult c = check_scaling(PerturbedKernel(ModelParams::from_kappa(d, alpha, f * ks)));
      c.name += " kappa=" + fmtd(f) + "kappa*";
      ok &= record(log, c);
    }
    return ok;
  }});

  cs.push_back({9, "blow-up trichotomy", 300.0, [&](auto& log) {
    bool ok = true;
    const Vec x{0.5, 0.0}, y{0.0, 0.5};
    for (auto [f, want] : {std::pair{1.05, "diverging"}, std::pair{0.95, "converged"}, std::pair{1.0, "guard"}}) {
      const BlowupReport b = blowup_probe(1.0, x, y, ModelParams::from_kappa(d, alpha, f * ks));
      std::string extra;
      if (!b.partial_sums.empty())
        extra = " terms=" + std::to_string(b.partial_sums.size()) + " S/p=" + fmtd(b.partial_sums.back() / b.free_value) +
                " min_ratio_last5=" + fmtd(b.min_ratio_last5);
      ok &= within(log, "kappa=" + fmtd(f) + "kappa*: " + b.outcome + " (want " + want + ")" + extra, b.outcome == want ? 0.0 : 1.0, 0.0);
      if (f > 1.0) {
        ok &= within(log, "S_N > 1e3 p", b.sum_exceeds ? 0.0 : 1.0, 0.0);
        ok &= within(log, "increment ratio > 1.05 over the last 5 terms", b.ratio_exceeds ? 0.0 : 1.0, 0.0);
      }
    }
    return ok;
  }});

  cs.push_back({10, "quadratic forms", 600.0, [&](auto& log) {
    bool ok = true;
    const double exact = std::pow(pi, 1.5) / 2.0;
    const TestFunction g = TestFunction::gaussian(0.0, 0.0, 1.0);
    ok &= within(log, "Gaussian energy, Fourier route", std::abs(energy_fourier(g, alpha).value - exact), 1e-4);
    ok &= within(log, "Gaussian energy, direct route", std::abs(energy_direct(g, alpha).value - exact), 1e-4);
    const auto corpus = load_corpus(HARDYHEAT_DATA_DIR "/corpus_v1.json");
    ok &= within(log, "corpus has 20 functions", corpus.size() == 20 ? 0.0 : 1.0, 0.0);
    double worst = -INFINITY;
    bool hardy_ok = true;
    for (const auto& f : corpus) {
      const CheckResult c = check_hardy(f, alpha);
      worst = std::max(worst, c.defect);
      hardy_ok &= c.status != Status::Fail;
    }
    ok &= within(log, "Hardy gap >= -1e-6 E on the corpus (worst -gap/E = " + fmtd(worst) + ")", hardy_ok ? 0.0 : 1.0, 0.0);
    for (double f : {0.5, 1.0})
      for (std::size_t i : {0, 8, 3, 16}) {
        const TestFunction& t = corpus[i];
        CheckResult c = check_form_identity(t, ModelParams::from_kappa(d, alpha, f * ks));
        c.name += " #" + std::to_string(i) + " " + to_string(t.kind) + " kappa=" + fmtd(f) + "kappa*";
        ok &= record(log, c);
      }
    ok &= record(log, near_optimizer_gaps(alpha));
    return ok;
  }});

  cs.push_back({11, "byte-identical reruns", 0.0, [&](auto& log) {
    bool ok = true;
    const std::vector<std::string> cmds = {
        "verify --d 2 --alpha 1 --kappa 0.1 --suite supermedian --paths 20000 --seed 5",
        "mc --d 2 --alpha 1 --kappa subcritical:0.5 --x 0.3,0.4 --paths 20000 --format csv",
        "series --d 2 --alpha 1 --kappa critical --t 1 --x 1,0 --y 0,0.5 --fixed-point",
        "kappa --d 3 --alpha 1 --curve 101 --format csv"};
    int k = 0;
    for (const auto& c : cmds) {
      std::string out[2];
      for (int rep = 0; rep < 2; ++rep) {
        const std::string file = scratch + "/rerun_" + std::to_string(k) + "_" + std::to_string(rep) + ".out";
        const int rc = std::system((cli + " " + c + " --out " + file).c_str());
        if (rc != 0) note(log, "fail  exit status " + std::to_string(rc) + " for: " + c);
        ok &= rc == 0;
        out[rep] = read_file(file);
      }
      ok &= within(log, c + " (" + std::to_string(out[0].size()) + " bytes)", out[0] == out[1] && !out[0].empty() ? 0.0 : 1.0, 0.0);
      ++k;
    }
    return ok;
  }});

  int failed = 0;
  for (const auto& c : cs) {
    std::vector<std::string> log;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.body(log);
    } catch (const std::exception& e) {
      log.push_back(std::string("error  ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0 && dt > c.time_limit) {
      log.push_back("fail  runtime " + fmtd(dt) + " s exceeds " + fmtd(c.time_limit) + " s");
      ok = false;
    }
    failed += !ok;
    std::printf("%s criterion %2d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(), dt);
    for (const auto& l : log) std::printf("      %s\n", l.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(cs.size()) - failed, cs.size());
  return failed == 0 ? 0 : 1;
}
