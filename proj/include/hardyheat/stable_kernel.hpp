#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "core.hpp"
#include "params.hpp"
#include "quadrature.hpp"

namespace hardyheat {

/// Constant A in nu(y) = A |y|^{-d-alpha}.
inline double levy_constant(int d, double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (d + alpha)) /
         (std::pow(pi, 0.5 * d) * std::tgamma(1.0 - 0.5 * alpha));
}

inline double levy_density(const Vec& y, double alpha) {
  const int d = static_cast<int>(y.size());
  check_dim_alpha(d, alpha);
  double r = norm(y);
  if (r == 0.0) throw DomainError("levy_density: y = 0");
  return levy_constant(d, alpha) * std::pow(r, -d - alpha);
}

inline bool is_cauchy(double alpha) { return std::abs(alpha - 1.0) <= 1e-12; }

/// Cauchy kernel p_t(r) = G((d+1)/2) pi^{-(d+1)/2} t (t^2 + r^2)^{-(d+1)/2}.
inline double cauchy_kernel(int d, double t, double r) {
  const double c = std::tgamma(0.5 * (d + 1)) * std::pow(pi, -0.5 * (d + 1));
  return c * t * std::pow(t * t + r * r, -0.5 * (d + 1));
}

namespace detail {

/// z^{-nu} J_nu(z), entire in z.
inline double bessel_scaled(double nu, double z) {
  if (z < 1e-8) return 1.0 / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
  return std::cyl_bessel_j(nu, z) * std::pow(z, -nu);
}

}  // namespace detail

/// p_1(r) by radial Fourier-Hankel inversion, panels split at approximate Bessel zeros.
inline KernelValue hankel_p1(int d, double alpha, double r) {
  check_dim_alpha(d, alpha);
  const double nu = 0.5 * d - 1.0;
  const double smax = std::pow(62.0, 1.0 / alpha);
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(-std::pow(s, alpha)) * std::pow(s, d - 1) * detail::bessel_scaled(nu, r * s);
  };
  std::vector<double> e{0.0};
  const double e0 = std::min(1.0, smax);
  for (int k = 14; k >= 1; --k) e.push_back(e0 * std::pow(0.25, k));
  e.push_back(e0);
  for (double s = e0 + 1.0; s < smax; s += 1.0) e.push_back(s);
  if (r > 0.0) {
    for (int k = 1;; ++k) {
      double z = (k + 0.5 * nu - 0.25) * pi / r;
      if (z >= smax) break;
      if (z > 0.0) e.push_back(z);
    }
  }
  e.push_back(smax);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  double sum = 0.0, err = 0.0, mag = 0.0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    double pe = 0.0, l1 = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, e[k], e[k + 1], 0, 0.0, &pe, &l1);
    sum += v;
    err += pe;
    mag += l1;
  }
  const double pref = std::pow(2.0 * pi, -0.5 * d);
  KernelValue kv;
  kv.value = std::max(0.0, pref * sum);
  kv.abs_error = pref * (err + 4e-16 * mag);
  kv.method = Method::FourierInversion;
  return kv;
}

/// Expansion of p_1 in powers of r^{-alpha}: convergent for alpha < 1, asymptotic for alpha > 1.
inline std::pair<double, double> large_r_series_p1(int d, double alpha, double r, int kmax = 200) {
  double sum = 0.0, last = std::numeric_limits<double>::infinity();
  double err = std::numeric_limits<double>::infinity();
  const double lr = std::log(r);
  for (int k = 1; k <= kmax; ++k) {
    double ka = k * alpha;
    double sn = std::sin(0.5 * pi * ka);
    double lg = ka * std::log(2.0) + std::lgamma(0.5 * (ka + d)) + std::lgamma(0.5 * ka + 1.0) -
                std::lgamma(k + 1.0) - (ka + d) * lr - (0.5 * d + 1.0) * std::log(pi);
    double mag = std::exp(lg);
    if (mag > last && alpha > 1.0) { err = std::min(err, last); break; }
    double term = ((k % 2) ? 1.0 : -1.0) * mag * sn;
    sum += term;
    if (mag != 0.0) last = mag;
    if (mag < 1e-18 * std::abs(sum)) { err = mag + 1e-16 * std::abs(sum); break; }
    err = mag;
  }
  return {sum, err};
}

/// Power series of p_1 about r = 0 (entire for alpha > 1).
inline std::pair<double, double> small_r_series_p1(int d, double alpha, double r, int kmax = 400) {
  const double nu = 0.5 * d - 1.0;
  const double pref = std::pow(2.0 * pi, -0.5 * d) * std::pow(2.0, -nu);
  double sum = 0.0, maxterm = 0.0, last = 0.0;
  const double l = 2.0 * std::log(0.5 * r);
  for (int k = 0; k <= kmax; ++k) {
    double lg = (k > 0 ? k * l : 0.0) + std::lgamma((d + 2.0 * k) / alpha) - std::log(alpha) -
                std::lgamma(k + 1.0) - std::lgamma(k + 0.5 * d);
    double mag = std::exp(lg);
    sum += ((k % 2) ? -1.0 : 1.0) * mag;
    maxterm = std::max(maxterm, mag);
    last = mag;
    if (r == 0.0) break;
    if (k > 2 && mag < 1e-18 * std::abs(sum)) break;
  }
  return {pref * sum, pref * (last + 2e-16 * maxterm)};
}

/// Radial free kernel p_t(r) with fast evaluation; non-Cauchy alpha is tabulated in log-log.
class FreeKernel {
 public:
  FreeKernel(int d, double alpha) : d_(d), alpha_(alpha) {
    check_dim_alpha(d, alpha);
    cauchy_ = is_cauchy(alpha);
    cdc_ = std::tgamma(0.5 * (d + 1)) * std::pow(pi, -0.5 * (d + 1));
    auto s0 = small_r_series_p1(d, alpha, 0.0);
    p10_ = s0.first;
    // p_1(r) = a0 - a1 r^2 + ... near 0
    a1_ = std::pow(2.0 * pi, -0.5 * d) * std::pow(2.0, 1.0 - 0.5 * d) * 0.25 *
          std::tgamma((d + 2.0) / alpha) / (alpha * std::tgamma(1.0 + 0.5 * d));
    if (!cauchy_) build_table();
  }

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  double p1_at_zero() const { return p10_; }
  double curvature_at_zero() const { return a1_; }
  /// Radius beyond which the large-r expansion is used.
  double crossover() const { return rhi_; }

  double p1(double r) const {
    if (cauchy_) return cdc_ * std::pow(1.0 + r * r, -0.5 * (d_ + 1));
    if (r < rlo_) return p10_ - a1_ * r * r;
    if (r >= rhi_) return large_r_series_p1(d_, alpha_, r).first;
    double u = (std::log(r) - ulo_) / h_;
    int i = std::clamp(static_cast<int>(u), 1, static_cast<int>(lp_.size()) - 3);
    double f = u - i;
    // 4-point Lagrange on nodes i-1..i+2
    double w0 = -f * (f - 1) * (f - 2) / 6.0, w1 = (f + 1) * (f - 1) * (f - 2) / 2.0;
    double w2 = -(f + 1) * f * (f - 2) / 2.0, w3 = (f + 1) * f * (f - 1) / 6.0;
    return std::exp(w0 * lp_[i - 1] + w1 * lp_[i] + w2 * lp_[i + 1] + w3 * lp_[i + 2]);
  }

  /// p_t at distance r.
  double p(double t, double r) const {
    if (cauchy_) {
      double q = t * t + r * r;
      if (d_ == 2) return cdc_ * t / (q * std::sqrt(q));
      if (d_ == 3) return cdc_ * t / (q * q);
      return cdc_ * t * std::pow(q, -0.5 * (d_ + 1));
    }
    double a = std::pow(t, -1.0 / alpha_);
    return std::pow(a, d_) * p1(r * a);
  }

  /// Shared instance per (d, alpha).
  static std::shared_ptr<const FreeKernel> get(int d, double alpha) {
    static std::mutex m;
    static std::map<std::pair<int, double>, std::shared_ptr<const FreeKernel>> cache;
    std::lock_guard<std::mutex> lk(m);
    auto key = std::make_pair(d, alpha);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto k = std::make_shared<const FreeKernel>(d, alpha);
    cache.emplace(key, k);
    return k;
  }

 private:
  void build_table() {
    // crossover: smallest grid radius from which the expansion holds to 1e-13 relative
    rhi_ = 1e3;
    for (double r = 1e3; r >= 0.5; r /= 1.05) {
      auto s = large_r_series_p1(d_, alpha_, r);
      if (!(s.second < 1e-13 * std::abs(s.first)) || !(s.first > 0.0)) break;
      rhi_ = r;
    }
    rlo_ = 1e-4;
    ulo_ = std::log(rlo_);
    h_ = 0.005;
    int n = static_cast<int>(std::ceil((std::log(rhi_) - ulo_) / h_)) + 4;
    lp_.resize(n);
    for (int i = 0; i < n; ++i) {
      double r = std::exp(ulo_ + (i - 1) * h_);
      double v;
      if (r >= rhi_) v = large_r_series_p1(d_, alpha_, r).first;
      else v = hankel_p1(d_, alpha_, r).value;
      lp_[i] = std::log(v);
    }
    // node i sits at ulo + (i-1) h
    ulo_ -= h_;
  }

  int d_;
  double alpha_;
  bool cauchy_ = false;
  double cdc_ = 0.0, p10_ = 0.0, a1_ = 0.0;
  double rlo_ = 0.0, rhi_ = std::numeric_limits<double>::infinity(), ulo_ = 0.0, h_ = 1.0;
  std::vector<double> lp_;
};

/// p_t(x), closed form for alpha = 1 and Fourier-Hankel inversion otherwise.
inline KernelValue free_kernel(double t, const Vec& x, double alpha) {
  const int d = static_cast<int>(x.size());
  check_dim_alpha(d, alpha);
  if (!(t > 0.0)) throw DomainError("free_kernel: t must be > 0");
  const double r = norm(x);
  if (is_cauchy(alpha)) {
    double v = cauchy_kernel(d, t, r);
    return {v, 4e-16 * v, Method::ClosedForm};
  }
  const double a = std::pow(t, -1.0 / alpha), sc = std::pow(a, d);
  const double r1 = r * a;
  auto fk = FreeKernel::get(d, alpha);
  if (r1 >= fk->crossover()) {
    auto s = large_r_series_p1(d, alpha, r1);
    return {sc * s.first, sc * s.second, Method::Series};
  }
  KernelValue kv = hankel_p1(d, alpha, r1);
  kv.value *= sc;
  kv.abs_error *= sc;
  return kv;
}

/// p_t(x) / (t^{-d/alpha} ^ t |x|^{-d-alpha}).
inline double free_kernel_bound_ratio(double t, const Vec& x, double alpha) {
  const int d = static_cast<int>(x.size());
  const double r = norm(x);
  double env = std::pow(t, -d / alpha);
  if (r > 0.0) env = std::min(env, t * std::pow(r, -d - alpha));
  return free_kernel(t, x, alpha).value / env;
}

/// Closed form of c_1 (Riesz potential constant), used as an oracle.
inline double normalizer_c1_closed(int d, double alpha, double beta) {
  double lg = (d - beta) * std::log(2.0) + 0.5 * d * std::log(pi) + std::lgamma(0.5 * (d - beta)) -
              std::lgamma(0.5 * beta) - std::lgamma((d - beta) / alpha);
  return std::exp(lg);
}

namespace detail {

/// Integral over (0, inf) of g(u) on a log scale about tau, by adaptive Gauss-Kronrod.
template <class G>
inline double log_scale_integral(G&& g, double wlo, double whi, double tau, double* err) {
  auto f = [&](double w) {
    double u = tau * std::exp(w);
    return g(u) * u;
  };
  double e = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, wlo, whi, 20, 1e-14, &e);
  if (err) *err += e;
  return v;
}

}  // namespace detail

/// c_1 = 1 / int_0^inf s^{(d-alpha-beta)/alpha} p_s(e) ds, by quadrature.
inline double normalizer_c1(const FreeKernel& fk, double beta) {
  const int d = fk.d();
  const double alpha = fk.alpha();
  if (!(beta > 0.0) || !(beta < d)) throw DomainError("normalizer_c1: beta must lie in (0, d)");
  const double g = (d - alpha - beta) / alpha;
  auto f = [&](double s) { return std::pow(s, g) * fk.p(s, 1.0); };
  // p_s(e) ~ A s as s -> 0; p_s(e) ~ p_1(0) s^{-d/alpha} as s -> inf
  const double A = levy_constant(d, alpha);
  const double slo = 1e-12, shi = 1e12;
  double I = A * std::pow(slo, g + 2.0) / (g + 2.0);
  I += detail::log_scale_integral(f, std::log(slo), std::log(shi), 1.0, nullptr);
  const double e = beta / alpha;
  I += fk.p1_at_zero() * std::pow(shi, -e) / e -
       fk.curvature_at_zero() * std::pow(shi, -e - 2.0 / alpha) / (e + 2.0 / alpha);
  return 1.0 / I;
}

inline double normalizer_c1(int d, double alpha, double beta) {
  return normalizer_c1(*FreeKernel::get(d, alpha), beta);
}

/// h_beta(s, x) = int p(s,x,z)|z|^{-beta} dz = c_1 int_0^inf p(s+u, x) u^{(d-alpha-beta)/alpha} du.
inline KernelValue weighted_mass(const FreeKernel& fk, double s, double r, double beta) {
  const int d = fk.d();
  const double alpha = fk.alpha();
  if (!(beta > 0.0)) {
    if (beta == 0.0) return {1.0, 0.0, Method::ClosedForm};
    throw DomainError("weighted_mass: beta must be >= 0");
  }
  if (!(beta < d)) throw DomainError("weighted_mass: beta must be < d");
  if (!(s > 0.0)) throw DomainError("weighted_mass: s must be > 0");
  const double g = (d - alpha - beta) / alpha;
  const double c1 = normalizer_c1_closed(d, alpha, beta);
  const double tau = s + std::pow(r, alpha);
  const double ulo = 1e-9 * s, U = 1e6 * tau;
  double err = 0.0;
  auto f = [&](double u) { return fk.p(s + u, r) * std::pow(u, g); };
  double I = fk.p(s, r) * std::pow(ulo, g + 1.0) / (g + 1.0);
  I += detail::log_scale_integral(f, std::log(ulo / tau), std::log(U / tau), tau, &err);
  const double da = d / alpha, e = beta / alpha;
  I += fk.p1_at_zero() * (std::pow(U, -e) / e - da * s * std::pow(U, -e - 1.0) / (e + 1.0)) -
       fk.curvature_at_zero() * r * r * std::pow(U, -e - 2.0 / alpha) / (e + 2.0 / alpha);
  KernelValue kv{c1 * I, c1 * (err + 1e-12 * std::abs(I)), Method::FourierInversion};
  if (fk.alpha() == 1.0) kv.method = Method::ClosedForm;
  return kv;
}

inline KernelValue weighted_mass(double s, const Vec& x, double beta, double alpha) {
  return weighted_mass(*FreeKernel::get(static_cast<int>(x.size()), alpha), s, norm(x), beta);
}

/// int_0^t h_beta(s, x) ds = c_1 int_0^inf p_v(x) [v^{g+1} - (v-t)_+^{g+1}]/(g+1) dv.
inline double time_integrated_mass(const FreeKernel& fk, double t, double r, double beta) {
  const int d = fk.d();
  const double alpha = fk.alpha();
  if (!(beta > 0.0) || !(beta < d)) throw DomainError("time_integrated_mass: beta must lie in (0, d)");
  if (!(t > 0.0)) throw DomainError("time_integrated_mass: t must be > 0");
  if (r == 0.0 && beta >= alpha) throw DomainError("time_integrated_mass: diverges at x = 0 for beta >= alpha");
  const double g1 = (d - beta) / alpha;  // g + 1
  const double c1 = normalizer_c1_closed(d, alpha, beta);
  const double A = levy_constant(d, alpha);
  double I = 0.0;
  // v in (0, t): v = t e^w
  {
    auto f = [&](double v) { return fk.p(v, r) * std::pow(v, g1) / g1; };
    double wlo = -60.0;
    double vlo = t * std::exp(wlo);
    if (r > 0.0) I += A * std::pow(r, -d - alpha) * std::pow(vlo, g1 + 2.0) / (g1 * (g1 + 2.0));
    else I += fk.p1_at_zero() * std::pow(vlo, g1 - d / alpha + 1.0) / (g1 * (g1 - d / alpha + 1.0));
    I += detail::log_scale_integral(f, wlo, 0.0, t, nullptr);
  }
  // v in (t, inf): v = t + t e^w
  {
    auto B = [&](double v) {
      double rt = t / v;
      return -std::pow(v, g1) * std::expm1(g1 * std::log1p(-rt)) / g1;
    };
    auto f = [&](double w) {
      double u = t * std::exp(w), v = t + u;
      return fk.p(v, r) * B(v) * u;
    };
    const double V = 1e7 * std::max(t, std::pow(r, alpha));
    double e = 0.0;
    I += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -60.0, std::log((V - t) / t), 20, 1e-14, &e);
    // tail: B ~ t v^{g} - g t^2 v^{g-1}/2, p ~ a0 v^{-d/alpha} - a1 r^2 v^{-(d+2)/alpha}
    const double ex = beta / alpha + 1.0, gm = g1 - 1.0;
    I += fk.p1_at_zero() * (t * std::pow(V, -ex + 1.0) / (ex - 1.0) - 0.5 * gm * t * t * std::pow(V, -ex) / ex) -
         fk.curvature_at_zero() * r * r * t * std::pow(V, -ex + 1.0 - 2.0 / alpha) / (ex - 1.0 + 2.0 / alpha);
  }
  return c1 * I;
}

inline double time_integrated_mass(double t, const Vec& x, double beta, double alpha) {
  return time_integrated_mass(*FreeKernel::get(static_cast<int>(x.size()), alpha), t, norm(x), beta);
}

/// int p(t, x, y) g(|y|) dy by plane-cell quadrature about x and the origin.
template <class G>
inline double radial_expectation(const FreeKernel& fk, double t, double r, G&& g, double floor_rel = 1e-14,
                                 CellRule rule = CellRule{16, 12, 10}) {
  const int d = fk.d();
  const double sg = std::pow(t, 1.0 / fk.alpha());
  std::vector<CellCenter> cs;
  CellCenter cx;
  cx.x = r;
  cx.scale = sg;
  cs.push_back(cx);
  CellCenter c0;
  c0.origin = true;
  c0.floor = floor_rel * std::max(r, sg);
  cs.push_back(c0);
  return integrate_cells(d, cs, rule, [&](double zx, double zy, double zp) {
    double dz = std::sqrt((zx - r) * (zx - r) + zy * zy + zp * zp);
    double rz = std::sqrt(zx * zx + zy * zy + zp * zp);
    return fk.p(t, dz) * g(rz);
  });
}

/// Prefactor * int_0^t h_alpha - (int p(t,x,y) ln|y| dy - ln|x|).
inline double log_identity_residual(const FreeKernel& fk, double t, double r) {
  const int d = fk.d();
  const double alpha = fk.alpha();
  if (!(r > 0.0)) throw DomainError("log_identity_residual: x must be nonzero");
  const double pref = std::tgamma(0.5 * alpha) * std::tgamma(0.5 * d) /
                      (std::pow(2.0, 1.0 - alpha) * std::tgamma(0.5 * (d - alpha)));
  const double lhs = pref * time_integrated_mass(fk, t, r, alpha);
  const double eps = 1e-14 * std::max(r, std::pow(t, 1.0 / alpha));
  double rhs = radial_expectation(fk, t, r, [](double u) { return std::log(u); }, 1e-14);
  // disk |y| < eps: p frozen at y = 0
  rhs += fk.p(t, r) * sphere_area(d) * std::pow(eps, d) * (std::log(eps) / d - 1.0 / (double(d) * d));
  rhs -= std::log(r);
  return lhs - rhs;
}

inline double log_identity_residual(double t, const Vec& x, double alpha) {
  return log_identity_residual(*FreeKernel::get(static_cast<int>(x.size()), alpha), t, norm(x));
}

}  // namespace hardyheat
