#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "core.hpp"
#include "interp.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "stable_kernel.hpp"

namespace hardyheat {

struct WeightedConfig {
  double vmin = 1e-6, vmax = 1e6;
  double h = 0.25;  ///< log spacing of the collocation grid
  int n_s = 10;    ///< Gauss nodes per time panel
  double s_ratio = 0.15;
  CellRule rule{8, 8, 8, 1e4};
};

/// Phi(t, x) = int p~(t, x, y) |y|^{-beta} dy for the Hardy-perturbed kernel.
///
/// Integrating the Duhamel equation in y gives, at t = 1 and with Phi(t, x) = t^{-beta/alpha} phi(t^{-1/alpha}|x|),
///   phi(v) = h_beta(1, v) + kappa int_0^1 ds (1-s)^{-beta/alpha} int p(s, x, z) |z|^{-alpha} phi(|z| (1-s)^{-1/alpha}) dz.
/// phi is collocated as E(v) c(ln v) with E(v) = v^{-delta} (1+v)^{delta-beta}, so c tends to constants at both ends.
class WeightedSolver {
 public:
  WeightedSolver(const ModelParams& mp, double beta, WeightedConfig cfg = {}, const Budget& budget = Budget())
      : mp_(mp), beta_(beta), cfg_(cfg), fk_(FreeKernel::get(mp.d, mp.alpha)) {
    if (!(beta >= 0.0) || !(beta < mp.d)) throw DomainError("weight exponent must lie in [0, d)");
    delta_ = mp.closure_delta();
    grid_.u0 = std::log(cfg.vmin);
    grid_.n = static_cast<int>(std::round(std::log(cfg.vmax / cfg.vmin) / cfg.h)) + 1;
    grid_.h = std::log(cfg.vmax / cfg.vmin) / (grid_.n - 1);
    assemble(budget);
  }

  const ModelParams& params() const { return mp_; }
  double beta() const { return beta_; }
  const UniformGrid& grid() const { return grid_; }

  double envelope(double v) const { return std::pow(v, -delta_) * std::pow(1.0 + v, delta_ - beta_); }

  /// Collocation values of h_beta(1, .) / E.
  const Eigen::VectorXd& source() const { return b_; }
  /// Operator on coefficient vectors: c -> (K c) / E.
  const Eigen::MatrixXd& op() const { return K_; }

  /// Solves c = b + K c.
  const Eigen::VectorXd& solution() const {
    if (!solved_) {
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(grid_.n, grid_.n) - K_;
      c_ = I.partialPivLu().solve(b_);
      solved_ = true;
    }
    return c_;
  }

  /// Neumann terms c_0 = b, c_n = K c_{n-1}.
  std::vector<Eigen::VectorXd> series(int n_terms) const {
    std::vector<Eigen::VectorXd> out{b_};
    for (int n = 1; n <= n_terms; ++n) out.push_back(K_ * out.back());
    return out;
  }

  double phi(double v, const Eigen::VectorXd& c) const {
    auto st = grid_.stencil(std::log(v));
    double s = 0.0;
    for (int k = 0; k < st.count; ++k) s += st.w[k] * c[st.first + k];
    return envelope(v) * s;
  }
  double phi(double v) const { return phi(v, solution()); }

  /// Phi(t, r) for coefficient vector c.
  double value(double t, double r, const Eigen::VectorXd& c) const {
    const double a = std::pow(t, -1.0 / mp_.alpha);
    return std::pow(a, beta_) * phi(r * a, c);
  }
  double value(double t, double r) const { return value(t, r, solution()); }

  /// int_0^t Phi(s, r) ds = alpha r^{alpha-beta} int_{r t^{-1/alpha}}^inf v^{beta-alpha-1} phi(v) dv.
  double time_integral(double t, double r, const Eigen::VectorXd& c) const {
    const double alpha = mp_.alpha;
    if (!(r > 0.0)) throw DomainError("time_integral: x must be nonzero");
    const double wlo = std::log(r * std::pow(t, -1.0 / alpha));
    const double whi = grid_.top();
    auto f = [&](double w) {
      double v = std::exp(w);
      return std::pow(v, beta_ - alpha) * phi(v, c);
    };
    double I = 0.0;
    if (wlo < whi) {
      // split at grid nodes so each piece is a single cubic times a smooth envelope
      double a = wlo;
      int k0 = std::max(0, static_cast<int>(std::ceil((wlo - grid_.u0) / grid_.h)));
      for (int k = k0; k < grid_.n; ++k) {
        double b = grid_.node(k);
        if (b > a) I += integrate_gl(a, b, 8, f);
        a = std::max(a, b);
      }
    }
    // beyond the grid: phi = c_N E(v), E -> v^{-beta}
    const double v0 = std::exp(std::max(wlo, whi));
    auto tail = [&](double w) {
      double v = v0 * std::exp(w);
      return std::pow(v, beta_ - alpha) * phi(v, c);
    };
    I += integrate_gl(0.0, 20.0, 32, tail) + c[grid_.n - 1] * std::pow(v0 * std::exp(20.0), -alpha) / alpha;
    return alpha * std::pow(r, alpha - beta_) * I;
  }
  double time_integral(double t, double r) const { return time_integral(t, r, solution()); }

 private:
  void assemble(const Budget& budget) {
    const int n = grid_.n, d = mp_.d;
    const double alpha = mp_.alpha, kappa = mp_.kappa, dl = delta_;
    b_.resize(n);
    K_ = Eigen::MatrixXd::Zero(n, n);
    const double sph = sphere_area(d);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
      budget.check("weighted solver assembly");
      const int i = static_cast<int>(ii);
      const double rho = std::exp(grid_.node(i));
      const double Ei = envelope(rho);
      b_[i] = weighted_mass(*fk_, 1.0, rho, beta_).value / Ei;
      if (kappa == 0.0) return;
      std::vector<double> row(n, 0.0);
      const auto sn = graded_unit_interval(1e-3 * std::min(1.0, std::pow(rho, alpha)), 1e-7, cfg_.s_ratio, cfg_.n_s);
      for (auto [s, ws] : sn) {
        const double sa = std::pow(s, 1.0 / alpha), ra = std::pow(1.0 - s, 1.0 / alpha);
        const double eps = std::min(1e-3 * std::min(rho, sa), cfg_.vmin * ra);
        const double pref = kappa * ws * std::pow(1.0 - s, -beta_ / alpha);
        std::vector<CellCenter> cs(2);
        cs[0].x = rho;
        cs[0].scale = sa;
        cs[1].origin = true;
        cs[1].floor = eps;
        const double lra = std::log(ra), ira = 1.0 / ra;
        cell_points(d, cs, cfg_.rule, [&](double zx, double zy, double zp, double w) {
          const double rz = std::sqrt(zx * zx + zy * zy + zp * zp);
          const double dz = std::sqrt((zx - rho) * (zx - rho) + zy * zy + zp * zp);
          const double lrz = std::log(rz), lv = lrz - lra;
          // |z|^{-alpha} E(v)
          const double g = std::exp(-alpha * lrz - dl * lv + (dl - beta_) * std::log1p(rz * ira));
          const double k = pref * w * fk_->p(s, dz) * g;
          auto st = grid_.stencil(lv);
          for (int q = 0; q < st.count; ++q) row[st.first + q] += k * st.w[q];
        });
        // |z| < eps: kernel frozen at z = 0 and E(v) = v^{-delta}
        row[0] += pref * fk_->p(s, rho) * sph * std::pow(ra, dl) * std::pow(eps, d - alpha - dl) / (d - alpha - dl);
      }
      for (int j = 0; j < n; ++j) K_(i, j) = row[j] / Ei;
    });
  }

  ModelParams mp_;
  double beta_ = 0.0, delta_ = 0.0;
  WeightedConfig cfg_;
  std::shared_ptr<const FreeKernel> fk_;
  UniformGrid grid_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd K_;
  mutable Eigen::VectorXd c_;
  mutable bool solved_ = false;
};

/// Weighted solvers for one coupling, built on demand and shared between checks. Error estimates
/// compare against a solver on a grid twice as coarse.
class WeightedBank {
 public:
  explicit WeightedBank(const ModelParams& mp, WeightedConfig cfg = {}, Budget budget = Budget())
      : mp_(mp), cfg_(cfg), budget_(budget) {}

  const ModelParams& params() const { return mp_; }

  const WeightedSolver& solver(double beta, bool coarse = false) {
    std::lock_guard<std::mutex> lk(m_);
    auto& slot = bank_[{beta, coarse}];
    if (!slot) {
      WeightedConfig c = cfg_;
      if (coarse) c.h *= 2.0;
      slot = std::make_unique<WeightedSolver>(mp_, beta, c, budget_);
      slot->solution();
    }
    return *slot;
  }

  /// int p~(t, x, y) |y|^{-beta} dy at |x| = r.
  KernelValue integral(double t, double r, double beta) {
    const double v = solver(beta).value(t, r), vc = solver(beta, true).value(t, r);
    return {v, std::abs(v - vc), Method::FixedPoint};
  }

  /// int_0^t int p~(s, x, y) |y|^{-beta} dy ds at |x| = r.
  KernelValue time_integral(double t, double r, double beta) {
    const double v = solver(beta).time_integral(t, r), vc = solver(beta, true).time_integral(t, r);
    return {v, std::abs(v - vc), Method::FixedPoint};
  }

 private:
  ModelParams mp_;
  WeightedConfig cfg_;
  Budget budget_;
  std::mutex m_;
  std::map<std::pair<double, bool>, std::unique_ptr<WeightedSolver>> bank_;
};

}  // namespace hardyheat
