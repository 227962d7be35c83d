#pragma once

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "stable_kernel.hpp"

namespace hardyheat {

struct McConfig {
  long n_paths = 100000;
  int n_steps = 64;
  std::uint64_t seed = 1;
  double weight_cap = std::exp(20.0);
  double substep_radius = 8.0;  ///< halve a step while |X| < substep_radius * (step)^{1/alpha}
  int max_levels = 12;
};

struct McEstimate {
  double mean = 0.0, std_error = 0.0, ess = 0.0, capped_fraction = 0.0;
  long n_paths = 0;
  int n_steps = 0;
  std::uint64_t seed = 0;
};

/// Independent stream for (seed, index); identical for any scheduling or worker count.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL)));
}

/// Increments of the isotropic alpha-stable process, E exp(i xi X_h) = exp(-h |xi|^alpha), as
/// sqrt(2 S) G with S a positive alpha/2-stable subordinator increment and G standard normal.
class StableSampler {
 public:
  StableSampler(int d, double alpha) : d_(d), a_(0.5 * alpha), alpha_(alpha) { check_dim_alpha(d, alpha); }

  int d() const { return d_; }
  double alpha() const { return alpha_; }

  /// Positive stable variable with E exp(-lambda S) = exp(-lambda^{alpha/2}) (Chambers-Mallows-Stuck).
  template <class Rng>
  double subordinator(Rng& g) const {
    const double u = pi * boost::random::uniform_01<double>()(g);
    const double e = boost::random::exponential_distribution<double>(1.0)(g);
    const double a = a_;
    return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) * std::pow(std::sin((1.0 - a) * u) / e, (1.0 - a) / a);
  }

  /// Adds an increment over time h to x.
  template <class Rng>
  void step(Rng& g, double h, double* x) const {
    const double sc = std::pow(h, 1.0 / alpha_) * std::sqrt(2.0 * subordinator(g));
    boost::random::normal_distribution<double> nd;
    for (int i = 0; i < d_; ++i) x[i] += sc * nd(g);
  }

 private:
  int d_;
  double a_, alpha_;
};

/// Path on a uniform base grid of n_steps steps over [0, t]; finer steps are not recorded.
template <class Rng>
inline std::vector<std::pair<double, Vec>> sample_stable_path(const Vec& x0, double t, const StableSampler& smp,
                                                              int n_steps, Rng& g) {
  if (!(t > 0.0) || n_steps < 1) throw DomainError("path needs t > 0 and at least one step");
  std::vector<std::pair<double, Vec>> out{{0.0, x0}};
  Vec x = x0;
  const double h = t / n_steps;
  for (int k = 1; k <= n_steps; ++k) {
    smp.step(g, h, x.data());
    out.emplace_back(k * h, x);
  }
  return out;
}

namespace detail {

/// Per-path additive functionals along an adaptively refined path.
struct PathFunctionals {
  double A = 0.0;      ///< int_0^t |X_s|^{-alpha} ds
  double W_int = 0.0;  ///< int_0^t e^{kappa A_s} |X_s|^{-gamma} ds
  double end_r = 0.0;  ///< |X_t|
};

template <class Rng>
struct PathWalker {
  const StableSampler& smp;
  const McConfig& cfg;
  double kappa, gamma;
  bool want_w;
  Rng& g;
  double x[16] = {};
  double rx = 0.0, fa = 0.0, fg = 0.0;
  PathFunctionals out{};

  double r() const {
    double s = 0.0;
    for (int i = 0; i < smp.d(); ++i) s += x[i] * x[i];
    return std::sqrt(s);
  }

  // steps are halved while the path is close to the origin on the step's own scale
  void advance(double h, int level) {
    if (level < cfg.max_levels && rx < cfg.substep_radius * std::pow(h, 1.0 / smp.alpha())) {
      advance(0.5 * h, level + 1);
      advance(0.5 * h, level + 1);
      return;
    }
    // Left-point rule: the refinement keeps h |X|^{-alpha} <= substep_radius^{-alpha} per step, whereas an
    // end value may sit arbitrarily close to the origin and would dominate a trapezoid.
    // with the rate frozen over the step, e^{kappa A_s} is integrated exactly, so the functionals telescope
    const double la = kappa * h * fa;
    if (want_w) out.W_int += h * std::exp(kappa * out.A) * fg * (la > 1e-12 ? std::expm1(la) / la : 1.0);
    out.A += h * fa;
    smp.step(g, h, x);
    rx = r();
    fa = std::pow(rx, -smp.alpha());
    if (want_w) fg = std::pow(rx, -gamma);
  }

  PathFunctionals run(const Vec& x0, double t) {
    for (int i = 0; i < smp.d(); ++i) x[i] = x0[i];
    rx = r();
    fa = std::pow(rx, -smp.alpha());
    fg = want_w ? std::pow(rx, -gamma) : 0.0;
    const double h = t / cfg.n_steps;
    for (int k = 0; k < cfg.n_steps; ++k) advance(h, 0);
    out.end_r = rx;
    return out;
  }
};

/// Mean and spread of per-path samples in index order, with capping statistics.
inline McEstimate summarize(const std::vector<double>& v, const std::vector<double>& w, long n_capped,
                            const McConfig& cfg) {
  McEstimate e;
  const double n = static_cast<double>(v.size());
  double s = 0.0, s2 = 0.0, sw = 0.0, sw2 = 0.0;
  for (double a : v) s += a;
  e.mean = s / n;
  for (double a : v) s2 += (a - e.mean) * (a - e.mean);
  for (double a : w) {
    sw += a;
    sw2 += a * a;
  }
  e.std_error = v.size() > 1 ? std::sqrt(s2 / (n - 1.0) / n) : 0.0;
  e.ess = sw2 > 0.0 ? sw * sw / sw2 : n;
  e.capped_fraction = static_cast<double>(n_capped) / n;
  e.n_paths = static_cast<long>(v.size());
  e.n_steps = cfg.n_steps;
  e.seed = cfg.seed;
  return e;
}

template <class Sample>
inline McEstimate run_paths(const McConfig& cfg, Sample&& sample) {
  if (cfg.n_paths < 1) throw DomainError("need at least one path");
  if (!(cfg.weight_cap > 1.0)) throw DomainError("weight cap must exceed 1");
  const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
  std::vector<double> v(n), w(n);
  std::vector<char> capped(n, 0);
  const std::size_t chunk = 256, nchunks = (n + chunk - 1) / chunk;
  parallel_for(nchunks, [&](std::size_t c) {
    for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
      auto g = path_stream(cfg.seed, i);
      bool cap = false;
      sample(g, v[i], w[i], cap);
      capped[i] = cap;
    }
  });
  long nc = 0;
  for (char c : capped) nc += c;
  return summarize(v, w, nc, cfg);
}

}  // namespace detail

/// Estimates int p~(t, x, y) |y|^{-beta} dy = E_x[exp(kappa int_0^t |X_s|^{-alpha} ds) |X_t|^{-beta}].
inline McEstimate feynman_kac(const Vec& x, double t, double beta, const ModelParams& mp, const McConfig& cfg = {}) {
  if (static_cast<int>(x.size()) != mp.d || mp.d > 16) throw DomainError("dimension mismatch");
  if (!(norm(x) > 0.0)) throw DomainError("x must be nonzero");
  if (!(beta >= 0.0) || !(beta < mp.d - mp.alpha)) throw DomainError("weight exponent must lie in [0, d - alpha)");
  if (mp.regime == Regime::Supercritical) throw DomainError("Feynman-Kac weights diverge for kappa > kappa*");
  const StableSampler smp(mp.d, mp.alpha);
  const double lcap = std::log(cfg.weight_cap);
  auto est = detail::run_paths(cfg, [&](std::mt19937_64& g, double& v, double& w, bool& cap) {
    detail::PathWalker<std::mt19937_64> pw{smp, cfg, mp.kappa, 0.0, false, g};
    const auto f = pw.run(x, t);
    const double la = mp.kappa * f.A;
    cap = la > lcap;
    w = std::exp(std::min(la, lcap));
    v = w * std::pow(f.end_r, -beta);
  });
  if (est.capped_fraction > 0.01)
    throw QuadratureError("more than 1% of Feynman-Kac weights capped; the estimate is biased low");
  return est;
}

/// Per-path defect of the weighted invariance identity:
///   e^{kappa A_t} |X_t|^{-beta} - |x|^{-beta} - (kappa - kappa_beta) int_0^t e^{kappa A_s} |X_s|^{-beta-alpha} ds.
inline McEstimate fk_invariance_defect(const Vec& x, double t, double beta, const ModelParams& mp,
                                       const McConfig& cfg = {}) {
  if (static_cast<int>(x.size()) != mp.d || mp.d > 16) throw DomainError("dimension mismatch");
  if (!(norm(x) > 0.0)) throw DomainError("x must be nonzero");
  if (mp.regime == Regime::Supercritical) throw DomainError("Feynman-Kac weights diverge for kappa > kappa*");
  // beta = delta is admissible at kappa* too: the correction term vanishes
  if (!(beta >= 0.0) || (!(beta < mp.d - mp.alpha - mp.delta) && beta != mp.delta))
    throw DomainError("weight exponent must lie in [0, d - alpha - delta)");
  const StableSampler smp(mp.d, mp.alpha);
  const double kb = beta == 0.0 ? 0.0 : kappa_of_beta(mp.d, mp.alpha, beta);
  const double lcap = std::log(cfg.weight_cap), xb = std::pow(norm(x), -beta);
  auto est = detail::run_paths(cfg, [&](std::mt19937_64& g, double& v, double& w, bool& cap) {
    detail::PathWalker<std::mt19937_64> pw{smp, cfg, mp.kappa, beta + mp.alpha, true, g};
    const auto f = pw.run(x, t);
    const double la = mp.kappa * f.A;
    cap = la > lcap;
    w = std::exp(std::min(la, lcap));
    v = w * std::pow(f.end_r, -beta) - xb - (mp.kappa - kb) * f.W_int;
  });
  if (est.capped_fraction > 0.01)
    throw QuadratureError("more than 1% of Feynman-Kac weights capped; the estimate is biased low");
  return est;
}

/// First-order term kappa int_0^t ds int dz p(s, x, z) |z|^{-alpha} p(t-s, z, y) by sampling the
/// interaction time uniformly and the interaction point from a mixture of the free law started at the
/// nearer endpoint and a |z|^{-alpha} law on a ball around the origin.
inline McEstimate mc_first_order(double t, const Vec& x, const Vec& y, const ModelParams& mp, const McConfig& cfg = {}) {
  const int d = mp.d;
  if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d || d > 16) throw DomainError("dimension mismatch");
  const double rx = norm(x), ry = norm(y);
  if (!(rx > 0.0) || !(ry > 0.0)) throw DomainError("x and y must be nonzero");
  const auto fk = FreeKernel::get(d, mp.alpha);
  const StableSampler smp(d, mp.alpha);
  const double alpha = mp.alpha, R = 0.5 * std::min(rx, ry);
  const double gnorm = (d - alpha) / (sphere_area(d) * std::pow(R, d - alpha));
  auto est = detail::run_paths(cfg, [&](std::mt19937_64& g, double& v, double& w, bool& cap) {
    boost::random::uniform_01<double> U;
    boost::random::normal_distribution<double> nd;
    const double s = t * U(g);
    const bool from_x = s <= 0.5 * t;
    const Vec& a = from_x ? x : y;
    const double ha = from_x ? s : t - s;
    double z[16];
    if (U(g) < 0.5) {
      for (int i = 0; i < d; ++i) z[i] = a[i];
      smp.step(g, ha, z);
    } else {
      double n2 = 0.0;
      for (int i = 0; i < d; ++i) {
        z[i] = nd(g);
        n2 += z[i] * z[i];
      }
      const double rad = R * std::pow(U(g), 1.0 / (d - alpha)) / std::sqrt(n2);
      for (int i = 0; i < d; ++i) z[i] *= rad;
    }
    double rz2 = 0.0, dx2 = 0.0, dy2 = 0.0;
    for (int i = 0; i < d; ++i) {
      rz2 += z[i] * z[i];
      dx2 += (z[i] - x[i]) * (z[i] - x[i]);
      dy2 += (z[i] - y[i]) * (z[i] - y[i]);
    }
    const double rz = std::sqrt(rz2);
    const double px = fk->p(s, std::sqrt(dx2)), py = fk->p(t - s, std::sqrt(dy2));
    const double gz = rz < R ? gnorm * std::pow(rz, -alpha) : 0.0;
    const double m = 0.5 * (from_x ? px : py) + 0.5 * gz;
    v = m > 0.0 ? t * mp.kappa * std::pow(rz, -alpha) * px * py / m : 0.0;
    w = 1.0;
    cap = false;
  });
  return est;
}

}  // namespace hardyheat
