#pragma once

#include <deque>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "stable_kernel.hpp"
#include "table.hpp"

namespace hardyheat {

struct QuadratureConfig {
  double rel_tol = 1e-3;
  double eps0 = 1e-3;  ///< disk |z| < eps0 * (smallest local scale) is integrated against a frozen kernel
  int time_subdivisions = 8;  ///< Gauss nodes per graded time panel of the pointwise step
  double s_floor = 1e-3;
  int max_terms = 200;
  CellRule rule{8, 8, 8, 1e4};
  TableConfig table;
  double divergence_bound = 1e12;  ///< table ratios beyond this flag a diverging fixed point
};

/// Point (t, x, y) reduced to t = 1 and to the plane of x and y: x = (rho, 0), y = (yx, yy).
struct ReducedPoint {
  double scale = 1.0;  ///< t^{-d/alpha}
  double rho = 0.0, r = 0.0, c = 1.0, yx = 0.0, yy = 0.0;

  ReducedPoint(double t, const Vec& x, const Vec& y, double alpha) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (x.size() != y.size()) throw DomainError("dimension mismatch");
    const double a = std::pow(t, -1.0 / alpha);
    scale = std::pow(t, -static_cast<double>(x.size()) / alpha);
    rho = a * norm(x);
    r = a * norm(y);
    if (!(rho > 0.0) || !(r > 0.0)) throw DomainError("x and y must be nonzero");
    c = std::clamp(dot(x, y) * a * a / (rho * r), -1.0, 1.0);
    yx = r * c;
    yy = r * std::sqrt(std::max(0.0, 1.0 - c * c));
  }
};

/// int_0^t ds int_{R^d} dz f(s, z) over the plane spanned by x = (rho, 0) and y = (yx, yy).
/// f(s, zx, zy, zp, |z|) is the integrand; disk(s, eps) must return the |z| < eps part.
template <class F, class Disk>
inline double space_time_integral(int d, double alpha, double t, double rho, double yx, double yy,
                                  const QuadratureConfig& cfg, F&& f, Disk&& disk) {
  const double r = std::hypot(yx, yy);
  const double lo0 = cfg.s_floor * std::min(1.0, std::pow(rho, alpha) / t);
  const double lo1 = cfg.s_floor * std::min(1.0, std::pow(r, alpha) / t);
  double total = 0.0;
  for (auto [u, wu] : graded_unit_interval(lo0, lo1, 0.15, cfg.time_subdivisions)) {
    const double s = t * u, sa = std::pow(s, 1.0 / alpha), ra = std::pow(t - s, 1.0 / alpha);
    const double eps = cfg.eps0 * std::min({rho, r, sa, ra});
    std::vector<CellCenter> cs(3);
    cs[0].x = rho;
    cs[0].scale = sa;
    cs[1].x = yx;
    cs[1].y = yy;
    cs[1].scale = ra;
    cs[2].origin = true;
    cs[2].floor = eps;
    double acc = 0.0;
    cell_points(d, cs, cfg.rule, [&](double zx, double zy, double zp, double w) {
      const double rz = std::sqrt(zx * zx + zy * zy + zp * zp);
      acc += w * f(s, zx, zy, zp, rz);
    });
    total += t * wu * (acc + disk(s, eps));
  }
  return total;
}

/// Per-term values of the perturbation series at one point.
struct SeriesState {
  std::vector<double> terms;     ///< p_0 .. p_N
  std::vector<double> errors;    ///< error estimate per term
  double sum = 0.0;
  double tail_estimate = 0.0;    ///< geometric extrapolation of the dropped remainder
  double weighted_tail_bound = std::numeric_limits<double>::infinity();  ///< at beta = delta*, see below
  double quotient = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

/// Perturbed kernel p~ = p T built on the ratio table, with a pointwise Duhamel step for refinement.
class PerturbedKernel {
 public:
  PerturbedKernel(const ModelParams& mp, QuadratureConfig cfg = {}, const Budget& budget = Budget())
      : mp_(mp), cfg_(cfg), budget_(budget), fk_(FreeKernel::get(mp.d, mp.alpha)) {
    if (mp.kappa > 0.0) {
      op_ = RatioOperator::get(mp.d, mp.alpha, cfg.table, RatioOperator::default_cache_dir(), budget);
      M_ = mp.kappa * op_->effective(mp.closure_delta());
    }
  }

  const ModelParams& params() const { return mp_; }
  const QuadratureConfig& config() const { return cfg_; }
  const FreeKernel& free() const { return *fk_; }
  /// Null when kappa = 0.
  const std::shared_ptr<const RatioOperator>& table() const { return op_; }

  double free_value(double t, const Vec& x, const Vec& y) const { return fk_->p(t, dist(x, y)); }

  /// Table ratio p~/p of the full kernel, from (I - kappa M) T = 1.
  const RatioField& fixed_point() const {
    std::call_once(fp_once_, [&] {
      if (mp_.regime == Regime::Supercritical)
        throw DomainError("the fixed point exists only for kappa <= kappa*");
      Eigen::VectorXd T;
      if (mp_.kappa == 0.0) {
        fp_ = std::make_unique<RatioField>(nullptr, Eigen::VectorXd(), 0.0);
        return;
      }
      const int G = op_->size();
      Eigen::MatrixXd A = Eigen::MatrixXd::Identity(G, G) - M_;
      T = A.partialPivLu().solve(Eigen::VectorXd::Ones(G));
      const double lo = T.minCoeff(), hi = T.maxCoeff();
      if (!(lo >= 1.0 - 1e-6) || !(hi < cfg_.divergence_bound))
        throw QuadratureError("fixed point is not a positive bounded solution; coupling too close to blow-up");
      fp_ = std::make_unique<RatioField>(op_, std::move(T), mp_.closure_delta());
    });
    return *fp_;
  }

  /// Table of the n-th term ratio p_n/p; T_0 = 1, T_n = kappa M T_{n-1}.
  const Eigen::VectorXd& term_table(int n) const {
    std::lock_guard<std::mutex> lk(tm_);
    if (!op_) throw DomainError("term tables need kappa > 0");
    if (terms_.empty()) terms_.push_back(Eigen::VectorXd::Ones(op_->size()));
    while (static_cast<int>(terms_.size()) <= n) {
      budget_.check("series terms");
      terms_.push_back(M_ * terms_.back());
    }
    return terms_[n];
  }
  RatioField term_field(int n) const { return RatioField(op_, term_table(n), mp_.closure_delta()); }

  /// Table value of p~ (fast; used as an evaluator inside other quadratures).
  double value(double t, const Vec& x, const Vec& y) const {
    const double p = free_value(t, x, y);
    if (mp_.kappa == 0.0) return p;
    ReducedPoint q(t, x, y, mp_.alpha);
    return p * fixed_point()(q.rho, q.r, q.c);
  }

  /// kappa int ds int dz B_s(z) |z|^{-alpha} F(z_s, y_s): one Duhamel step applied to the ratio field F
  /// at the exact point, with B_s the free bridge density from x to y. F = nullptr means F = 1.
  double step(const ReducedPoint& q, const RatioField* F) const {
    const int d = mp_.d;
    const double alpha = mp_.alpha, ia = 1.0 / alpha;
    const double p1 = fk_->p(1.0, std::hypot(q.rho - q.yx, q.yy));
    const double dl = F ? mp_.closure_delta() : 0.0;
    const double sph = sphere_area(d);
    budget_.check("Duhamel step");
    const double I = space_time_integral(
        d, alpha, 1.0, q.rho, q.yx, q.yy, cfg_,
        [&](double s, double zx, double zy, double zp, double rz) {
          const double dx = std::sqrt((zx - q.rho) * (zx - q.rho) + zy * zy + zp * zp);
          const double dy = std::sqrt((zx - q.yx) * (zx - q.yx) + (zy - q.yy) * (zy - q.yy) + zp * zp);
          double v = fk_->p(s, dx) * fk_->p(1.0 - s, dy) * std::pow(rz, -alpha);
          if (F && v != 0.0) {
            const double ra = std::pow(1.0 - s, -ia);
            v *= (*F)(rz * ra, q.r * ra, (zx * q.yx + zy * q.yy) / (rz * q.r));
          }
          return v;
        },
        [&](double s, double eps) {
          // F ~ (|z|/eps)^{-delta} inside the disk
          const double ra = std::pow(1.0 - s, -ia);
          const double f0 = F ? (*F)(eps * ra, q.r * ra, 0.0) : 1.0;
          return fk_->p(s, q.rho) * fk_->p(1.0 - s, q.r) * f0 * sph * std::pow(eps, d - alpha) / (d - alpha - dl);
        });
    return mp_.kappa * I / p1;
  }

  /// Fixed-point kernel at (t, x, y) refined by one Duhamel step; the error is the step's correction.
  KernelValue tilde_p_fixed_point(double t, const Vec& x, const Vec& y) const {
    const double p = free_value(t, x, y);
    if (mp_.kappa == 0.0) return {p, 0.0, Method::FixedPoint};
    ReducedPoint q(t, x, y, mp_.alpha);
    const RatioField& T = fixed_point();
    const double table = T(q.rho, q.r, q.c);
    const double refined = 1.0 + step(q, &T);
    return {p * refined, p * (std::abs(refined - table) + cfg_.rel_tol * 1e-3 * refined), Method::FixedPoint};
  }

  std::vector<KernelValue> tilde_p_fixed_point(double t, const Vec& x, const std::vector<Vec>& ys) const {
    std::vector<KernelValue> out(ys.size());
    fixed_point();
    parallel_for(ys.size(), [&](std::size_t i) { out[i] = tilde_p_fixed_point(t, x, ys[i]); });
    return out;
  }

  /// p_n(t, x, y); for n >= 1 one Duhamel step applied to the tabulated p_{n-1}/p (exact for n = 1).
  KernelValue perturbation_term(int n, double t, const Vec& x, const Vec& y) const {
    if (n < 0) throw DomainError("term index must be nonnegative");
    const double p = free_value(t, x, y);
    if (n == 0) return {p, 0.0, Method::ClosedForm};
    if (mp_.kappa == 0.0) return {0.0, 0.0, Method::Series};
    ReducedPoint q(t, x, y, mp_.alpha);
    if (n == 1) {
      const double v = step(q, nullptr);
      return {p * v, p * v * 1e-6, Method::Series};
    }
    const RatioField Fm = term_field(n - 1);
    const double v = step(q, &Fm);
    const double table = term_field(n)(q.rho, q.r, q.c);
    return {p * v, p * std::abs(v - table), Method::Series};
  }

  /// Partial sums of the series until geometric decay makes the remainder negligible.
  SeriesState tilde_p(double t, const Vec& x, const Vec& y, int max_terms = -1) const {
    if (mp_.regime == Regime::Supercritical) throw DomainError("series evaluation needs kappa <= kappa*; use the blow-up probe");
    if (max_terms < 0) max_terms = cfg_.max_terms;
    SeriesState st;
    const double ks = mp_.kstar();
    for (int n = 0; n <= max_terms; ++n) {
      KernelValue v = perturbation_term(n, t, x, y);
      st.terms.push_back(v.value);
      st.errors.push_back(v.abs_error);
      st.sum += v.value;
      if (mp_.kappa == 0.0) {
        st.converged = true;
        break;
      }
      if (n >= 3) {
        const auto& T = st.terms;
        const double q1 = T[n] / T[n - 1], q2 = T[n - 1] / T[n - 2];
        st.quotient = std::max(q1, q2);
        if (st.quotient < 1.0) {
          st.tail_estimate = st.quotient / (1.0 - st.quotient) * T[n];
          if (st.tail_estimate < cfg_.rel_tol * st.sum) {
            st.converged = true;
            break;
          }
        }
      }
    }
    const int N = static_cast<int>(st.terms.size()) - 1;
    // sum over n > N of kappa^n / kappa*^{n+1} |x|^{-delta*}, from the weighted term bound at beta = delta*
    if (mp_.kappa < ks)
      st.weighted_tail_bound = std::pow(mp_.kappa / ks, N + 1) / (ks - mp_.kappa) * std::pow(norm(x), -delta_star(mp_.d, mp_.alpha));
    if (mp_.kappa == 0.0) st.weighted_tail_bound = 0.0;
    return st;
  }

  /// p + int_0^t int p(s, x, z) q(z) p~(t-s, z, y) dz ds evaluated in the original coordinates at time t,
  /// with the table kernel inside; compared with the t = 1 reduction it tests self-similarity.
  KernelValue tilde_p_direct(double t, const Vec& x, const Vec& y) const;

  /// Partial sums of the tabulated series, sum_{n<=N} T_n, as a field.
  RatioField series_field(int N) const {
    Eigen::VectorXd s = term_table(0);
    for (int n = 1; n <= N; ++n) s += term_table(n);
    return RatioField(op_, std::move(s), mp_.closure_delta());
  }

 private:
  ModelParams mp_;
  QuadratureConfig cfg_;
  Budget budget_;
  std::shared_ptr<const FreeKernel> fk_;
  std::shared_ptr<const RatioOperator> op_;
  Eigen::MatrixXd M_;
  mutable std::once_flag fp_once_;
  mutable std::unique_ptr<RatioField> fp_;
  mutable std::mutex tm_;
  mutable std::deque<Eigen::VectorXd> terms_;  // references stay valid as it grows
};

/// Orthonormal frame e1 = x/|x|, e2 in span(x, y), e3 orthogonal to both; maps in-plane coordinates
/// and an out-of-plane distance back to R^d.
class PlaneFrame {
 public:
  PlaneFrame(const Vec& x, const Vec& y) : d_(static_cast<int>(x.size())), e1_(d_), e2_(d_, 0.0), e3_(d_, 0.0), z_(d_) {
    if (y.size() != x.size()) throw DomainError("dimension mismatch");
    rho_ = norm(x);
    if (!(rho_ > 0.0)) throw DomainError("x must be nonzero");
    for (int i = 0; i < d_; ++i) e1_[i] = x[i] / rho_;
    yx_ = dot(y, e1_);
    for (int i = 0; i < d_; ++i) e2_[i] = y[i] - yx_ * e1_[i];
    yy_ = norm(e2_);
    if (yy_ > 1e-14 * (rho_ + norm(y))) {
      for (double& v : e2_) v /= yy_;
    } else {
      yy_ = 0.0;
      complete(e2_, {&e1_});
    }
    if (d_ >= 3) complete(e3_, {&e1_, &e2_});
  }

  double rho() const { return rho_; }
  double yx() const { return yx_; }
  double yy() const { return yy_; }

  /// Point zx e1 + zy e2 + zp e3; the returned reference is overwritten by the next call.
  const Vec& at(double zx, double zy, double zp) {
    for (int i = 0; i < d_; ++i) z_[i] = zx * e1_[i] + zy * e2_[i] + zp * e3_[i];
    return z_;
  }

 private:
  void complete(Vec& e, std::initializer_list<const Vec*> basis) const {
    for (int k = 0; k < d_; ++k) {
      std::fill(e.begin(), e.end(), 0.0);
      e[k] = 1.0;
      for (const Vec* b : basis) {
        const double c = dot(e, *b);
        for (int i = 0; i < d_; ++i) e[i] -= c * (*b)[i];
      }
      const double n = norm(e);
      if (n > 0.5) {
        for (double& v : e) v /= n;
        return;
      }
    }
  }

  int d_;
  Vec e1_, e2_, e3_, z_;
  double rho_ = 0.0, yx_ = 0.0, yy_ = 0.0;
};

using KernelEval = std::function<double(double, const Vec&, const Vec&)>;

/// int_0^t int left(s, x, z) |z|^{-alpha} right(t-s, z, y) dz ds in the coordinates of x and y.
/// left and right may grow like |z|^{-gl} and |z|^{-gr} at the origin, with gl + gr < d - alpha.
inline double duhamel_integral(double t, const Vec& x, const Vec& y, const KernelEval& left, const KernelEval& right,
                               double gl, double gr, const ModelParams& mp, const QuadratureConfig& cfg) {
  const int d = mp.d;
  if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d) throw DomainError("dimension mismatch");
  PlaneFrame fr(x, y);
  const double sph = sphere_area(d), yx = fr.yx(), yy = fr.yy();
  return space_time_integral(
      d, mp.alpha, t, fr.rho(), yx, yy, cfg,
      [&](double s, double zx, double zy, double zp, double rz) {
        const Vec& z = fr.at(zx, zy, zp);
        const double b = right(t - s, z, y);
        if (b == 0.0) return 0.0;
        return left(s, x, z) * std::pow(rz, -mp.alpha) * b;
      },
      [&](double s, double eps) {
        // both factors follow their power laws inside the disk
        const Vec& z = fr.at(0.0, eps, 0.0);
        return left(s, x, z) * right(t - s, z, y) * sph * std::pow(eps, d - mp.alpha) / (d - mp.alpha - gl - gr);
      });
}

/// |p~ - p - int_0^t int p~(s, x, z) q(z) p(t-s, z, y) dz ds| / p~ for an arbitrary evaluator p~(t, x, y).
inline double duhamel_residual(double t, const Vec& x, const Vec& y, const KernelEval& tilde_p, const ModelParams& mp,
                               const QuadratureConfig& cfg = {}) {
  const auto fk = FreeKernel::get(mp.d, mp.alpha);
  const double pt = tilde_p(t, x, y);
  const double p = fk->p(t, dist(x, y));
  if (mp.kappa == 0.0) return std::abs(pt - p) / pt;
  const KernelEval free = [&](double s, const Vec& a, const Vec& b) { return fk->p(s, dist(a, b)); };
  const double I = duhamel_integral(t, x, y, tilde_p, free, mp.closure_delta(), 0.0, mp, cfg);
  return std::abs(pt - p - mp.kappa * I) / pt;
}

inline KernelValue PerturbedKernel::tilde_p_direct(double t, const Vec& x, const Vec& y) const {
  const double p = free_value(t, x, y);
  if (mp_.kappa == 0.0) return {p, 0.0, Method::FixedPoint};
  const KernelEval free = [&](double s, const Vec& a, const Vec& b) { return fk_->p(s, dist(a, b)); };
  const KernelEval tp = [&](double s, const Vec& a, const Vec& b) { return value(s, a, b); };
  const double v = p + mp_.kappa * duhamel_integral(t, x, y, free, tp, 0.0, mp_.closure_delta(), mp_, cfg_);
  return {v, std::abs(v - value(t, x, y)), Method::FixedPoint};
}

}  // namespace hardyheat
