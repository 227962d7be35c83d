#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace hardyheat {

enum class Regime { Subcritical, Critical, Supercritical };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "?";
}

/// Relative tolerance deciding |kappa - kappa*| is "exactly critical".
inline double critical_rel_tol = 1e-12;

inline void check_dim_alpha(int d, double alpha) {
  if (d < 1) throw DomainError("dimension must be >= 1");
  if (!(alpha > 0.0) || !(alpha < 2.0) || !(alpha < d))
    throw DomainError("alpha must satisfy 0 < alpha < min(2, d)");
}

/// kappa_beta = 2^a G((b+a)/2) G((d-b)/2) / (G(b/2) G((d-b-a)/2)), kappa_0 = 0.
inline double kappa_of_beta(int d, double alpha, double beta) {
  check_dim_alpha(d, alpha);
  if (!(beta >= 0.0) || !(beta < d - alpha))
    throw DomainError("beta must lie in [0, d - alpha)");
  if (beta == 0.0) return 0.0;
  double lg = alpha * std::log(2.0) + std::lgamma(0.5 * (beta + alpha)) +
              std::lgamma(0.5 * (d - beta)) - std::lgamma(0.5 * beta) -
              std::lgamma(0.5 * (d - beta - alpha));
  return std::exp(lg);
}

inline double kappa_star(int d, double alpha) {
  check_dim_alpha(d, alpha);
  double lg = alpha * std::log(2.0) + 2.0 * std::lgamma(0.25 * (d + alpha)) -
              2.0 * std::lgamma(0.25 * (d - alpha));
  return std::exp(lg);
}

inline double delta_star(int d, double alpha) { return 0.5 * (d - alpha); }

/// Unique delta in [0, (d-alpha)/2] with kappa_delta = kappa, by bisection.
inline double delta_of_kappa(int d, double alpha, double kappa) {
  check_dim_alpha(d, alpha);
  if (!(kappa >= 0.0)) throw DomainError("kappa must be >= 0");
  const double ks = kappa_star(d, alpha);
  if (kappa == 0.0) return 0.0;
  if (std::abs(kappa - ks) <= critical_rel_tol * ks) return delta_star(d, alpha);
  if (kappa > ks) throw DomainError("supercritical kappa has no delta");
  double lo = 1e-14, hi = delta_star(d, alpha);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (kappa_of_beta(d, alpha, mid) < kappa) lo = mid; else hi = mid;
  }
  double klo = kappa_of_beta(d, alpha, lo), khi = kappa_of_beta(d, alpha, hi);
  return std::abs(klo - kappa) <= std::abs(khi - kappa) ? lo : hi;
}

inline Regime classify(int d, double alpha, double kappa) {
  const double ks = kappa_star(d, alpha);
  if (std::abs(kappa - ks) <= critical_rel_tol * ks) return Regime::Critical;
  return kappa > ks ? Regime::Supercritical : Regime::Subcritical;
}

struct ModelParams {
  int d = 2;
  double alpha = 1.0;
  double kappa = 0.0;
  /// NaN in the supercritical regime.
  double delta = 0.0;
  Regime regime = Regime::Subcritical;

  static ModelParams from_kappa(int d, double alpha, double kappa) {
    check_dim_alpha(d, alpha);
    if (!(kappa >= 0.0)) throw DomainError("kappa must be >= 0");
    ModelParams p;
    p.d = d;
    p.alpha = alpha;
    p.kappa = kappa;
    p.regime = classify(d, alpha, kappa);
    if (p.regime == Regime::Critical) p.kappa = kappa_star(d, alpha);
    p.delta = p.regime == Regime::Supercritical ? std::numeric_limits<double>::quiet_NaN()
                                                : delta_of_kappa(d, alpha, p.kappa);
    return p;
  }

  static ModelParams from_delta(int d, double alpha, double delta) {
    check_dim_alpha(d, alpha);
    if (!(delta >= 0.0) || delta > delta_star(d, alpha))
      throw DomainError("delta must lie in [0, (d - alpha)/2]");
    ModelParams p;
    p.d = d;
    p.alpha = alpha;
    p.delta = delta;
    p.kappa = delta == delta_star(d, alpha) ? kappa_star(d, alpha) : kappa_of_beta(d, alpha, delta);
    p.regime = classify(d, alpha, p.kappa);
    return p;
  }

  double kstar() const { return kappa_star(d, alpha); }

  /// Exponent used where a growth rate at the origin is needed; delta* past criticality.
  double closure_delta() const { return regime == Regime::Supercritical ? delta_star(d, alpha) : delta; }

  /// H(t,x) = t^{delta/alpha} |x|^{-delta} + 1.
  double H(double t, double r) const {
    return std::pow(t, delta / alpha) * std::pow(r, -delta) + 1.0;
  }
};

/// (beta, kappa_beta) on a uniform grid of [0, d - alpha]; endpoints take the limit 0.
inline std::vector<std::pair<double, double>> kappa_curve(int d, double alpha, int n_points) {
  check_dim_alpha(d, alpha);
  if (n_points < 3) throw DomainError("n_points must be >= 3");
  std::vector<std::pair<double, double>> out;
  out.reserve(n_points);
  const double L = d - alpha;
  for (int i = 0; i < n_points; ++i) {
    double b = L * i / (n_points - 1);
    if (i == n_points - 1) b = L;
    double k = (i == 0 || i == n_points - 1) ? 0.0 : kappa_of_beta(d, alpha, b);
    out.emplace_back(b, k);
  }
  return out;
}

}  // namespace hardyheat
