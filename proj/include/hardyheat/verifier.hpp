#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "core.hpp"
#include "duhamel.hpp"
#include "mc.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "stable_kernel.hpp"
#include "weighted.hpp"

namespace hardyheat {

enum class Status { Pass, Fail, Warn };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Warn: return "warn";
  }
  return "?";
}

struct CheckResult {
  std::string name;
  Status status = Status::Pass;
  double defect = 0.0, tolerance = 0.0;
  double runtime = 0.0;  ///< seconds; not part of serialized output unless requested
  std::vector<std::pair<std::string, double>> values;

  CheckResult() = default;
  CheckResult(std::string n, double def, double tol) : name(std::move(n)), defect(def), tolerance(tol) {
    status = def <= tol ? Status::Pass : Status::Fail;
  }
  CheckResult& with(const std::string& k, double v) {
    values.emplace_back(k, v);
    return *this;
  }
  double value(const std::string& k) const {
    for (const auto& [n, v] : values)
      if (n == k) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {
template <class F>
inline CheckResult timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = f();
  r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}
inline double floor_tol(const ModelParams& mp) { return mp.kappa == 0.0 ? 1e-6 : 1e-2; }
}  // namespace detail

/// |int p~(s, x, z) p~(t, z, y) dz - p~(s+t, x, y)| / p~(s+t, x, y), with the table kernel inside
/// the integral and the refined fixed point on the right.
inline CheckResult check_chapman_kolmogorov(double s, double t, const Vec& x, const Vec& y, const PerturbedKernel& K) {
  return detail::timed([&] {
    const ModelParams& mp = K.params();
    const int d = mp.d;
    if (mp.regime == Regime::Supercritical) throw DomainError("no kernel for kappa > kappa*");
    if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d) throw DomainError("dimension mismatch");
    // the product of two peaked kernels needs a finer cell rule than a single Duhamel step
    CellRule rule = K.config().rule;
    rule.n_phi += 8;
    rule.n_rad += 8;
    rule.v_panel *= 0.5;
    auto conv = [&](const Vec& a, const Vec& b, double sa_t, double tb_t) {
      PlaneFrame fr(a, b);
      const double ia = 1.0 / mp.alpha, g = 2.0 * mp.closure_delta();
      const double eps = K.config().eps0 * std::min({fr.rho(), std::hypot(fr.yx(), fr.yy()), std::pow(sa_t, ia), std::pow(tb_t, ia)});
      std::vector<CellCenter> cs(3);
      cs[0].x = fr.rho();
      cs[0].scale = std::pow(sa_t, ia);
      cs[1].x = fr.yx();
      cs[1].y = fr.yy();
      cs[1].scale = std::pow(tb_t, ia);
      cs[2].origin = true;
      cs[2].floor = eps;
      double acc = 0.0;
      cell_points(d, cs, rule, [&](double zx, double zy, double zp, double w) {
        const Vec& z = fr.at(zx, zy, zp);
        const double v = K.value(tb_t, z, b);
        if (v != 0.0) acc += w * K.value(sa_t, a, z) * v;
      });
      const Vec& z = fr.at(0.0, eps, 0.0);
      acc += K.value(sa_t, a, z) * K.value(tb_t, z, b) * sphere_area(d) * std::pow(eps, d) / (d - g);
      return acc;
    };
    const double lhs = conv(x, y, s, t), lhs_sw = conv(y, x, t, s);
    const KernelValue rhs = mp.kappa == 0.0 ? KernelValue{K.free_value(s + t, x, y), 0.0, Method::ClosedForm}
                                            : K.tilde_p_fixed_point(s + t, x, y);
    const double def = std::abs(lhs - rhs.value) / rhs.value;
    const double tol = std::max(detail::floor_tol(mp), 3.0 * rhs.abs_error / rhs.value);
    return CheckResult("chapman_kolmogorov", def, tol)
        .with("lhs", lhs)
        .with("rhs", rhs.value)
        .with("defect_swapped", std::abs(lhs_sw - rhs.value) / rhs.value);
  });
}

/// int p~(t, x, y) |y|^{-delta} dy <= |x|^{-delta}, by quadrature and by Feynman-Kac.
/// The defect is the largest excess over h(x), in units of h(x), beyond three combined errors; pass at or below 0.
inline CheckResult check_supermedian(double t, const Vec& x, WeightedBank& bank, const McConfig* mc = nullptr) {
  return detail::timed([&] {
    const ModelParams& mp = bank.params();
    const double r = norm(x), h = std::pow(r, -mp.delta);
    const KernelValue det = bank.integral(t, r, mp.delta);
    double excess = (det.value - h) / h, err = det.abs_error / h;
    CheckResult res;
    double mc_excess = -std::numeric_limits<double>::infinity(), mc_err = 0.0;
    if (mc) {
      const McEstimate e = feynman_kac(x, t, mp.delta, mp, *mc);
      mc_excess = (e.mean - h) / h;
      mc_err = e.std_error / h;
      res.with("mc_mean", e.mean).with("mc_std_error", e.std_error).with("mc_ess", e.ess).with("mc_capped_fraction", e.capped_fraction);
    }
    // positive defect: excess over h beyond three combined errors in some route
    const double viol = std::max(excess - 3.0 * err, mc_excess - 3.0 * mc_err);
    CheckResult out("supermedian", viol, 0.0);
    out.with("h", h).with("quadrature", det.value).with("quadrature_error", det.abs_error);
    for (auto& v : res.values) out.values.push_back(v);
    return out;
  });
}

/// sup_x int p~(t, x, y) dy / H(t, x) on a log grid of |x| t^{-1/alpha}, and the supermedian ratio
/// int p~ H(t, .) / H(t, x) <= M + 1 checked on a refined grid against M from the coarse one.
inline CheckResult check_H_supermedian(WeightedBank& bank, int n_grid = 13, double r_lo = 1e-3, double r_hi = 1e3) {
  return detail::timed([&] {
    const ModelParams& mp = bank.params();
    const double dl = mp.delta;
    auto scan = [&](int n, double& M, double& ratio_max, double& err) {
      M = 0.0;
      ratio_max = 0.0;
      err = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (n - 1));
        const double H = std::pow(r, -dl) + 1.0;
        const KernelValue mass = bank.integral(1.0, r, 0.0);
        const KernelValue wdl = dl == 0.0 ? mass : bank.integral(1.0, r, dl);
        M = std::max(M, mass.value / H);
        ratio_max = std::max(ratio_max, (wdl.value + mass.value) / H);
        err = std::max(err, (mass.abs_error + wdl.abs_error) / H);
      }
    };
    double M0, R0, E0, M1, R1, E1;
    scan(n_grid, M0, R0, E0);
    scan(2 * n_grid - 1, M1, R1, E1);
    const double drift = std::abs(M1 - M0) / M0;
    const double excess = R1 / (M0 + 1.0) - 1.0;
    CheckResult res("H_supermedian", drift, 0.1);
    if (excess > std::max(1e-2, 3.0 * E1)) res.status = Status::Fail;
    res.with("bound_excess", excess);
    return res.with("M", M0).with("M_refined", M1).with("M_drift", drift).with("ratio_max", R1).with("ratio_max_coarse", R0);
  });
}

/// Weighted identity int p~ |y|^{-beta} = |x|^{-beta} + (kappa - kappa_beta) int_0^t int p~ |y|^{-beta-alpha};
/// deterministic defect relative to the left side, plus the Monte Carlo defect in standard errors.
inline CheckResult check_invariance(double beta, double t, const Vec& x, WeightedBank& bank, const McConfig* mc = nullptr,
                                    double tol = 1e-2) {
  return detail::timed([&] {
    const ModelParams& mp = bank.params();
    // beta = delta is the exact invariance of h and needs no correction integral, also at kappa*
    if (!(beta >= 0.0) || (!(beta < mp.d - mp.alpha - mp.delta) && beta != mp.delta))
      throw DomainError("beta outside [0, d - alpha - delta)");
    const double r = norm(x);
    const KernelValue lhs = bank.integral(t, r, beta);
    const double kb = beta == 0.0 ? 0.0 : kappa_of_beta(mp.d, mp.alpha, beta);
    double rhs = std::pow(r, -beta), rhs_err = 0.0;
    if (mp.kappa != kb) {
      const KernelValue ti = bank.time_integral(t, r, beta + mp.alpha);
      rhs += (mp.kappa - kb) * ti.value;
      rhs_err = std::abs(mp.kappa - kb) * ti.abs_error;
    }
    const double def = std::abs(lhs.value - rhs) / lhs.value;
    CheckResult res("invariance", def, tol);
    res.with("beta", beta).with("lhs", lhs.value).with("rhs", rhs).with("error_estimate", (lhs.abs_error + rhs_err) / lhs.value);
    if (mc) {
      const McEstimate e = fk_invariance_defect(x, t, beta, mp, *mc);
      const double z = e.std_error > 0.0 ? e.mean / e.std_error : (e.mean == 0.0 ? 0.0 : INFINITY);
      res.with("mc_defect", e.mean).with("mc_std_error", e.std_error).with("mc_z", z);
      if (std::abs(z) > 3.0) res.status = Status::Fail;
    }
    return res;
  });
}

/// Grid for the two-sided estimate: radii log spaced on [r_lo, r_hi], angles between x and y on [0, pi].
struct BoundsGrid {
  int n_r = 16, n_angle = 5;
  double r_lo = 1e-3, r_hi = 1e2;
  std::vector<double> times{0.25, 1.0, 4.0};
  BoundsGrid refined() const {
    BoundsGrid g = *this;
    g.n_r = 2 * n_r - 1;
    g.n_angle = 2 * n_angle - 1;
    return g;
  }
};

struct RatioReport {
  BoundsGrid grid;
  std::vector<double> ratios;  ///< p~ / (p H(t, x) H(t, y)), index ((t * n_r + i) * n_r + j) * n_angle + k
  double c_lower = 0.0, c_upper = 0.0;
  double refinement_drift = 0.0;  ///< grid refinement and the pointwise step at the extremal cells
  double scaling_collapse = 0.0;  ///< largest relative change of the ratio under (t, x, y) -> (lambda^alpha t, lambda x, lambda y)
};

namespace detail {
inline Vec planar(int d, double r, double angle) {
  Vec v(d, 0.0);
  v[0] = r * std::cos(angle);
  v[1] = r * std::sin(angle);
  return v;
}

inline RatioReport ratio_scan(const PerturbedKernel& K, const BoundsGrid& g) {
  const ModelParams& mp = K.params();
  RatioReport rep;
  rep.grid = g;
  const int nt = static_cast<int>(g.times.size());
  rep.ratios.assign(static_cast<std::size_t>(nt) * g.n_r * g.n_r * g.n_angle, 0.0);
  auto radius = [&](int i) { return g.r_lo * std::pow(g.r_hi / g.r_lo, static_cast<double>(i) / (g.n_r - 1)); };
  auto angle = [&](int k) { return g.n_angle == 1 ? 0.0 : pi * k / (g.n_angle - 1); };
  parallel_for(rep.ratios.size(), [&](std::size_t idx) {
    const int k = static_cast<int>(idx % g.n_angle), j = static_cast<int>(idx / g.n_angle % g.n_r);
    const int i = static_cast<int>(idx / g.n_angle / g.n_r % g.n_r), ti = static_cast<int>(idx / g.n_angle / g.n_r / g.n_r);
    const double t = g.times[ti];
    const Vec x = planar(mp.d, radius(i), 0.0), y = planar(mp.d, radius(j), angle(k));
    rep.ratios[idx] = K.value(t, x, y) / (K.free_value(t, x, y) * mp.H(t, radius(i)) * mp.H(t, radius(j)));
  });
  rep.c_lower = *std::min_element(rep.ratios.begin(), rep.ratios.end());
  rep.c_upper = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  return rep;
}
}  // namespace detail

/// Ratios p~ / (p H H) on a log-polar grid, their extremes and the drift of the extremes when the grid is refined.
inline RatioReport bounds_scan(const PerturbedKernel& K, const BoundsGrid& g = {}) {
  const ModelParams& mp = K.params();
  if (mp.regime == Regime::Supercritical) throw DomainError("no kernel for kappa > kappa*");
  if (!(g.r_lo >= 1e-3)) throw DomainError("the scan excludes the ball of radius 1e-3 about the origin");
  RatioReport rep = detail::ratio_scan(K, g);
  const RatioReport fine = detail::ratio_scan(K, g.refined());
  double drift = std::max(std::abs(fine.c_upper - rep.c_upper) / rep.c_upper,
                          std::abs(fine.c_lower - rep.c_lower) / rep.c_lower);
  auto radius = [&](int i) { return g.r_lo * std::pow(g.r_hi / g.r_lo, static_cast<double>(i) / (g.n_r - 1)); };
  auto angle = [&](int k) { return g.n_angle == 1 ? 0.0 : pi * k / (g.n_angle - 1); };
  auto cell = [&](std::size_t idx) {
    const int k = static_cast<int>(idx % g.n_angle), j = static_cast<int>(idx / g.n_angle % g.n_r);
    const int i = static_cast<int>(idx / g.n_angle / g.n_r % g.n_r), ti = static_cast<int>(idx / g.n_angle / g.n_r / g.n_r);
    return std::tuple<double, Vec, Vec, double, double>{g.times[ti], detail::planar(mp.d, radius(i), 0.0),
                                                         detail::planar(mp.d, radius(j), angle(k)), radius(i), radius(j)};
  };
  // the extremal cells once more with the pointwise Duhamel step on top of the table
  const auto lo = std::min_element(rep.ratios.begin(), rep.ratios.end()) - rep.ratios.begin();
  const auto hi = std::max_element(rep.ratios.begin(), rep.ratios.end()) - rep.ratios.begin();
  if (mp.kappa > 0.0)
    for (auto idx : {lo, hi}) {
      auto [t, x, y, rx, ry] = cell(static_cast<std::size_t>(idx));
      const double q = K.tilde_p_fixed_point(t, x, y).value / (K.free_value(t, x, y) * mp.H(t, rx) * mp.H(t, ry));
      drift = std::max(drift, std::abs(q - rep.ratios[idx]) / rep.ratios[idx]);
    }
  rep.refinement_drift = drift;
  // t = 4 against the t = 1 cells under (t, x, y) -> (lambda^alpha t, lambda x, lambda y), by the direct
  // route which does not pass through the reduction to t = 1
  double worst = 0.0;
  const auto t1 = std::find(g.times.begin(), g.times.end(), 1.0);
  if (mp.kappa > 0.0 && t1 != g.times.end()) {
    const double lam = std::pow(4.0, 1.0 / mp.alpha);
    const std::size_t ti = t1 - g.times.begin();
    std::vector<std::array<int, 3>> picks;
    for (int i : {0, g.n_r / 2, g.n_r - 1})
      for (int k : {0, g.n_angle - 1}) picks.push_back({i, g.n_r - 1 - i / 2, k});
    std::vector<double> dev(picks.size());
    parallel_for(picks.size(), [&](std::size_t p) {
      const auto [i, j, k] = picks[p];
      const Vec x = detail::planar(mp.d, lam * radius(i), 0.0), y = detail::planar(mp.d, lam * radius(j), angle(k));
      const double q = K.tilde_p_direct(4.0, x, y).value /
                       (K.free_value(4.0, x, y) * mp.H(4.0, lam * radius(i)) * mp.H(4.0, lam * radius(j)));
      const double q0 = rep.ratios[((ti * g.n_r + i) * g.n_r + j) * g.n_angle + k];
      dev[p] = std::abs(q - q0) / q0;
    });
    worst = *std::max_element(dev.begin(), dev.end());
  }
  rep.scaling_collapse = worst;
  return rep;
}

/// Log-log slope of p~(1, x, y0) as |x| -> 0. Increments between consecutive radii remove the
/// additive constant in p~ ~ A |x|^{-delta} + B, so their slope estimates -delta directly.
struct SlopeFit {
  std::vector<double> radii, values;
  double slope = 0.0;      ///< from increments
  double raw_slope = 0.0;  ///< of the values themselves
};

inline SlopeFit delta_slope(const PerturbedKernel& K, const Vec& y0, double r_lo = 1e-5, double r_hi = 1e-2, int n = 7) {
  const ModelParams& mp = K.params();
  SlopeFit f;
  f.radii.resize(n);
  f.values.resize(n);
  Vec dir(mp.d, 0.0);
  dir[1 % mp.d] = 1.0;
  for (int i = 0; i < n; ++i) f.radii[i] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (n - 1));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Vec x = dir;
    for (double& v : x) v *= f.radii[i];
    f.values[i] = K.tilde_p_fixed_point(1.0, x, y0).value;
  });
  auto fit = [](const std::vector<double>& u, const std::vector<double>& v) {
    const double n = static_cast<double>(u.size());
    double su = 0, sv = 0, suu = 0, suv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      su += u[i];
      sv += v[i];
      suu += u[i] * u[i];
      suv += u[i] * v[i];
    }
    return (n * suv - su * sv) / (n * suu - su * su);
  };
  std::vector<double> lu, lv, du, dv;
  for (int i = 0; i < n; ++i) {
    lu.push_back(std::log(f.radii[i]));
    lv.push_back(std::log(f.values[i]));
  }
  for (int i = 0; i + 1 < n; ++i) {
    const double dlt = f.values[i] - f.values[i + 1];
    if (dlt > 0.0) {
      du.push_back(lu[i]);
      dv.push_back(std::log(dlt));
    }
  }
  f.raw_slope = fit(lu, lv);
  f.slope = du.size() >= 2 ? fit(du, dv) : std::numeric_limits<double>::quiet_NaN();
  return f;
}

/// Divergence evidence past criticality and the subcritical control. Below kappa* the partial sums of
/// sum_n p_n are tracked. Above it p~ is expanded about the critical kernel p~*: with R = (I - kappa* M)^{-1}
/// the table terms are (kappa - kappa*)^n (R M)^n R 1. Each of these is infinite in the continuum, so on a
/// table resolved down to rho_min their ratios grow with the depth log(1/rho_min).
struct BlowupReport {
  std::string outcome;  ///< "converged", "diverging", "not-converged" or "guard"
  std::string expansion;  ///< "free" (sum of p_n) or "critical" (about p~*)
  std::vector<double> partial_sums, ratios;  ///< partial sums in absolute units; ratios of successive terms
  std::vector<double> free_series_ratios;    ///< supercritical only: term ratios of sum p_n on the same table
  double free_value = 0.0;
  double min_ratio_last5 = 0.0;
  bool sum_exceeds = false;    ///< S_N > 1e3 p
  bool ratio_exceeds = false;  ///< each of the last five term ratios > 1 + margin
};

/// Table resolved far enough toward the origin for the critical expansion to show its divergence.
inline TableConfig probe_table() {
  TableConfig c;
  c.n_r = 36;
  c.rho_min = 1e-15;
  c.radial_order = 4;
  c.rule = CellRule{5, 5, 5, 1e4};
  return c;
}

inline QuadratureConfig probe_config() {
  QuadratureConfig q;
  q.table = probe_table();
  return q;
}

inline BlowupReport blowup_probe(double t, const Vec& x, const Vec& y, const ModelParams& mp, int N_max = 60,
                                 double margin = 0.05, const QuadratureConfig& cfg = probe_config(),
                                 const Budget& budget = Budget()) {
  BlowupReport rep;
  if (mp.regime == Regime::Critical) {
    rep.outcome = "guard";
    return rep;
  }
  if (mp.kappa == 0.0) throw DomainError("the probe needs kappa > 0");
  if (N_max < 6) throw DomainError("the probe needs at least 6 terms");
  PerturbedKernel K(mp, cfg, budget);
  const ReducedPoint q(t, x, y, mp.alpha);
  rep.free_value = K.free_value(t, x, y);
  const auto& op = K.table();
  const double dl = mp.closure_delta();
  const Eigen::MatrixXd A = op->effective(dl);
  const int G = op->size();
  auto at = [&](const Eigen::VectorXd& v) { return RatioField(op, v, dl)(q.rho, q.r, q.c); };
  std::vector<double> terms;
  if (mp.regime == Regime::Subcritical) {
    rep.expansion = "free";
    // geometric decay may be slow near kappa*; run until the terms are negligible
    Eigen::VectorXd T = Eigen::VectorXd::Ones(G);
    double S = 0.0;
    for (int n = 0; n <= std::max(N_max, 4000); ++n) {
      budget.check("blow-up probe");
      terms.push_back(at(T));
      S += terms.back();
      if (n >= N_max && terms.back() < 1e-8 * S) break;
      T = mp.kappa * (A * T);
    }
  } else {
    rep.expansion = "critical";
    const double ks = mp.kstar(), e = mp.kappa - ks;
    const auto lu = (Eigen::MatrixXd::Identity(G, G) - ks * A).partialPivLu();
    Eigen::VectorXd T = lu.solve(Eigen::VectorXd::Ones(G));
    for (int n = 0; n <= N_max; ++n) {
      budget.check("blow-up probe");
      terms.push_back(at(T));
      T = e * lu.solve(A * T);
    }
    Eigen::VectorXd F = Eigen::VectorXd::Ones(G);
    double prev = at(F);
    for (int n = 1; n <= N_max; ++n) {
      F = mp.kappa * (A * F);
      const double v = at(F);
      rep.free_series_ratios.push_back(v / prev);
      prev = v;
    }
  }
  double S = 0.0;
  for (std::size_t n = 0; n < terms.size(); ++n) {
    S += terms[n];
    rep.partial_sums.push_back(S * rep.free_value);
    if (n > 0) rep.ratios.push_back(terms[n] / terms[n - 1]);
  }
  const int nr = static_cast<int>(rep.ratios.size());
  rep.min_ratio_last5 = *std::min_element(rep.ratios.end() - std::min(nr, 5), rep.ratios.end());
  double max_last5 = *std::max_element(rep.ratios.end() - std::min(nr, 5), rep.ratios.end());
  rep.sum_exceeds = rep.partial_sums.back() > 1e3 * rep.free_value;
  rep.ratio_exceeds = rep.min_ratio_last5 > 1.0 + margin;
  if (rep.sum_exceeds && rep.ratio_exceeds) rep.outcome = "diverging";
  else if (max_last5 < 1.0 && terms.back() < 1e-6 * S) rep.outcome = "converged";
  else rep.outcome = "not-converged";
  return rep;
}

/// Largest jump of p~(1, x, y0) between neighbouring grid cells, normalised by p H H, on nested grids
/// in |x| in [r_lo, r_hi] and the angle of x; warns unless the jump shrinks by a quarter or more per refinement.
inline CheckResult continuity_scan(const PerturbedKernel& K, double r_lo = 0.05, double r_hi = 5.0, int levels = 3) {
  return detail::timed([&] {
    const ModelParams& mp = K.params();
    if (mp.regime == Regime::Supercritical) throw DomainError("no kernel for kappa > kappa*");
    const Vec y0 = detail::planar(mp.d, 1.0, 0.0);
    std::vector<double> jumps;
    for (int l = 0; l < levels; ++l) {
      const int nr = 8 << l, na = 4 << l;
      std::vector<double> v(static_cast<std::size_t>(nr) * na), nrm(v.size());
      parallel_for(v.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx / na), k = static_cast<int>(idx % na);
        const double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (nr - 1));
        const Vec x = detail::planar(mp.d, r, 0.1 + (pi - 0.2) * k / (na - 1));
        v[idx] = K.value(1.0, x, y0);
        nrm[idx] = K.free_value(1.0, x, y0) * mp.H(1.0, r) * mp.H(1.0, 1.0);
      });
      double J = 0.0;
      for (int i = 0; i < nr; ++i)
        for (int k = 0; k < na; ++k) {
          const std::size_t a = static_cast<std::size_t>(i) * na + k;
          if (i + 1 < nr) J = std::max(J, std::abs(v[a + na] - v[a]) / (0.5 * (nrm[a] + nrm[a + na])));
          if (k + 1 < na) J = std::max(J, std::abs(v[a + 1] - v[a]) / (0.5 * (nrm[a] + nrm[a + 1])));
        }
      jumps.push_back(J);
    }
    double worst = 0.0;
    for (std::size_t l = 1; l < jumps.size(); ++l) worst = std::max(worst, jumps[l] / jumps[l - 1]);
    CheckResult res("continuity", worst, 0.75);
    if (res.status == Status::Fail) res.status = Status::Warn;
    for (std::size_t l = 0; l < jumps.size(); ++l) res.with("max_jump_level" + std::to_string(l), jumps[l]);
    return res;
  });
}

/// Self-similarity: p~(t, x, y) computed at time t in the original coordinates against
/// t^{-d/alpha} p~(1, t^{-1/alpha} x, t^{-1/alpha} y), at random points.
inline CheckResult check_scaling(const PerturbedKernel& K, int n_points = 20, std::uint64_t seed = 7) {
  return detail::timed([&] {
    const ModelParams& mp = K.params();
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    struct P { double t; Vec x, y; };
    std::vector<P> pts;
    for (int i = 0; i < n_points; ++i) {
      const double t = std::pow(10.0, -1.0 + 2.0 * U(g));
      const double rx = std::pow(10.0, -1.0 + 1.5 * U(g)), ry = std::pow(10.0, -1.0 + 1.5 * U(g));
      const double ax = 2.0 * pi * U(g), ay = 2.0 * pi * U(g);
      pts.push_back({t, detail::planar(mp.d, rx, ax), detail::planar(mp.d, ry, ay)});
    }
    std::vector<double> dev(pts.size()), tol(pts.size());
    K.fixed_point();
    parallel_for(pts.size(), [&](std::size_t i) {
      const P& p = pts[i];
      const KernelValue direct = K.tilde_p_direct(p.t, p.x, p.y);
      const double a = std::pow(p.t, -1.0 / mp.alpha);
      Vec x1 = p.x, y1 = p.y;
      for (double& v : x1) v *= a;
      for (double& v : y1) v *= a;
      const KernelValue unit = K.tilde_p_fixed_point(1.0, x1, y1);
      const double reduced = std::pow(p.t, -mp.d / mp.alpha) * unit.value;
      const double err = (direct.abs_error + std::pow(p.t, -mp.d / mp.alpha) * unit.abs_error) / reduced;
      dev[i] = std::abs(direct.value - reduced) / reduced;
      tol[i] = std::max(1e-3, 3.0 * err);
    });
    double worst = -INFINITY, wdev = 0.0, wtol = 0.0;
    for (std::size_t i = 0; i < dev.size(); ++i)
      if (dev[i] - tol[i] > worst) {
        worst = dev[i] - tol[i];
        wdev = dev[i];
        wtol = tol[i];
      }
    CheckResult res("scaling", wdev, wtol);
    return res.with("max_deviation", *std::max_element(dev.begin(), dev.end())).with("n_points", n_points);
  });
}

}  // namespace hardyheat
