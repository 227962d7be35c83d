#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "interp.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "stable_kernel.hpp"

namespace hardyheat {

struct TableConfig {
  int n_r = 24;  ///< radial nodes on [rho_min, rho_max], log spaced
  double rho_min = 1e-5, rho_max = 1e3;
  int radial_order = 6;  ///< Lagrange stencil width in log radius
  int n_theta = 6;       ///< Chebyshev-Lobatto nodes in cos(angle(x, y)), at most 32
  int n_s = 6;      ///< Gauss nodes per time panel
  double s_ratio = 0.15;
  double s_floor = 1e-2;  ///< time grading stops at s_floor * min(1, |x|^alpha), likewise for 1 - s
  CellRule rule{6, 6, 6, 1e4};

  std::string key(int d, double alpha) const {
    std::ostringstream o;
    o.precision(17);
    o << "d" << d << "_a" << alpha << "_r" << n_r << "_" << rho_min  << "_" << rho_max << "_o" << radial_order << "_t" << n_theta << "_s" << n_s
      << "_" << s_ratio << "_" << s_floor << "_c" << rule.n_phi << "_" << rule.n_rad << "_" << rule.n_psi << "_" << rule.far << "_"
      << rule.max_dphi << "_" << rule.v_panel;
    return o.str();
  }
};

/// Angular interpolation in c = cos(theta) on Chebyshev-Lobatto nodes.
struct AngularBasis {
  int n = 0;
  std::vector<double> c, bw;

  explicit AngularBasis(int n_nodes = 7) : n(n_nodes) {
    if (n < 2) throw DomainError("need at least two angular nodes");
    for (int k = 0; k < n; ++k) {
      c.push_back(std::cos(pi * k / (n - 1)));
      double w = (k % 2) ? -1.0 : 1.0;
      if (k == 0 || k == n - 1) w *= 0.5;
      bw.push_back(w);
    }
  }

  /// Cardinal weights at cos-value x (barycentric form).
  void weights(double x, double* out) const {
    x = std::clamp(x, -1.0, 1.0);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      double dx = x - c[k];
      if (dx == 0.0) {
        for (int j = 0; j < n; ++j) out[j] = j == k ? 1.0 : 0.0;
        return;
      }
      out[k] = bw[k] / dx;
      sum += out[k];
    }
    for (int k = 0; k < n; ++k) out[k] /= sum;
  }

  /// Averages of the cardinal functions over directions uniform on S^{d-1}.
  std::vector<double> sphere_average(int d) const {
    std::vector<double> avg(n, 0.0), w(n);
    double tot = 0.0;
    // density of cos(theta) is (1 - c^2)^{(d-3)/2}; integrate in theta to avoid the endpoint singularity
    gauss_on(0.0, pi, 64, [&](double th, double wt) {
      double dens = std::pow(std::sin(th), d - 2) * wt;
      weights(std::cos(th), w.data());
      for (int k = 0; k < n; ++k) avg[k] += dens * w[k];
      tot += dens;
    });
    for (double& a : avg) a /= tot;
    return avg;
  }
};

/// Discretisation of T -> int_0^1 ds int dz B_s(z) |z|^{-alpha} T(z_s, y_s) on the ratio table
/// T(rho, r, theta) = p~(1, x, y) / p(1, x, y), where B_s is the free bridge density from x to y at time s
/// and (z_s, y_s) = (1-s)^{-1/alpha} (z, y). Independent of kappa; the closure below rho_min depends
/// on the growth exponent and is folded in by effective().
class RatioOperator {
 public:
  RatioOperator(int d, double alpha, const TableConfig& cfg, const Budget& budget = Budget())
      : d_(d), alpha_(alpha), cfg_(cfg), ang_(cfg.n_theta) {
    check_dim_alpha(d, alpha);
    if (d < 2) throw DomainError("the kernel table needs d >= 2");
    init_layout();
    assemble(budget);
  }

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  const TableConfig& config() const { return cfg_; }
  const UniformGrid& radial() const { return rg_; }
  const AngularBasis& angular() const { return ang_; }
  int size() const { return G_; }
  int virtual_levels() const { return V_; }

  int index(int i, int j, int k) const {
    if (i > j) std::swap(i, j);
    return (i * rg_.n - i * (i - 1) / 2 + (j - i)) * ang_.n + k;
  }

  /// Operator for kappa = 1 with the rho < rho_min closure T ~ rho^{-delta}.
  Eigen::MatrixXd effective(double delta) const {
    Eigen::MatrixXd M = M1_;
    const int nb = rg_.n * ang_.n;
    for (int m = 1; m <= V_; ++m) M.leftCols(nb) += std::exp(delta * rg_.h * m) * Mv_.middleCols((m - 1) * nb, nb);
    M.leftCols(nb) += std::exp(delta * rg_.h * V_) / (d_ - alpha_ - delta) * Md_;
    return M;
  }

  /// Node coordinates (rho, r, c) of unknown g.
  std::tuple<double, double, double> node(int g) const { return nodes_[g]; }

  /// Shared instance; assembled data are cached on disk under `cache_dir` when given.
  static std::shared_ptr<const RatioOperator> get(int d, double alpha, const TableConfig& cfg,
                                                  const std::string& cache_dir = default_cache_dir(),
                                                  const Budget& budget = Budget()) {
    static std::mutex m;
    static std::map<std::string, std::shared_ptr<const RatioOperator>> mem;
    std::lock_guard<std::mutex> lk(m);
    const std::string key = cfg.key(d, alpha);
    if (auto it = mem.find(key); it != mem.end()) return it->second;
    std::shared_ptr<RatioOperator> op;
    std::filesystem::path file;
    if (!cache_dir.empty()) {
      file = std::filesystem::path(cache_dir) / ("ratio_" + std::to_string(std::hash<std::string>{}(key)) + ".bin");
      op = load(file, d, alpha, cfg);
    }
    if (!op) {
      op = std::make_shared<RatioOperator>(d, alpha, cfg, budget);
      if (!file.empty()) op->save(file);
    }
    mem.emplace(key, op);
    return op;
  }

  static std::string default_cache_dir() {
    const char* e = std::getenv("HARDYHEAT_CACHE_DIR");
    return e ? std::string(e) : std::string();
  }

 private:
  RatioOperator(int d, double alpha, const TableConfig& cfg, int) : d_(d), alpha_(alpha), cfg_(cfg), ang_(cfg.n_theta) {
    init_layout();
  }

  void init_layout() {
    rg_.n = cfg_.n_r;
    rg_.u0 = std::log(cfg_.rho_min);
    rg_.h = std::log(cfg_.rho_max / cfg_.rho_min) / (cfg_.n_r - 1);
    rg_.order = cfg_.radial_order;
    if (cfg_.n_theta > 32) throw DomainError("at most 32 angular nodes");
    // virtual levels reach two decades below rho_min, where the frozen-kernel disk takes over
    V_ = static_cast<int>(std::ceil(std::log(100.0) / rg_.h));
    ext_.n = rg_.n + V_;
    ext_.u0 = rg_.u0 - V_ * rg_.h;
    ext_.h = rg_.h;
    ext_.order = rg_.order;
    G_ = rg_.n * (rg_.n + 1) / 2 * ang_.n;
    nodes_.resize(G_);
    for (int i = 0; i < rg_.n; ++i)
      for (int j = i; j < rg_.n; ++j)
        for (int k = 0; k < ang_.n; ++k)
          nodes_[index(i, j, k)] = {std::exp(rg_.node(i)), std::exp(rg_.node(j)), ang_.c[k]};
  }

  void assemble(const Budget& budget) {
    const auto fk = FreeKernel::get(d_, alpha_);
    const int nb = rg_.n * ang_.n, nt = ang_.n;
    M1_ = Eigen::MatrixXd::Zero(G_, G_);
    Mv_ = Eigen::MatrixXd::Zero(G_, V_ * nb);
    Md_ = Eigen::MatrixXd::Zero(G_, nb);
    const std::vector<double> avg = ang_.sphere_average(d_);
    const double sph = sphere_area(d_);
    const double ia = 1.0 / alpha_;
    parallel_for(static_cast<std::size_t>(G_), [&](std::size_t gg) {
      budget.check("kernel table assembly");
      const int g = static_cast<int>(gg);
      auto [rho, r, c] = nodes_[g];
      const double yx = r * c, yy = r * std::sqrt(std::max(0.0, 1.0 - c * c));
      const double p1 = fk->p(1.0, std::sqrt((rho - yx) * (rho - yx) + yy * yy));
      std::vector<double> acc(ext_.n * nt);
      std::vector<double> wc(nt);
      const auto sn = graded_unit_interval(cfg_.s_floor * std::min(1.0, std::pow(rho, alpha_)),
                                           cfg_.s_floor * std::min(1.0, std::pow(r, alpha_)), cfg_.s_ratio, cfg_.n_s);
      for (auto [s, ws] : sn) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const double sa = std::pow(s, ia), ra = std::pow(1.0 - s, ia), lra = std::log(ra);
        const double eps0 = ra * cfg_.rho_min * std::exp(-V_ * rg_.h);
        const double pref = ws / p1;
        std::vector<CellCenter> cs(3);
        cs[0].x = rho;
        cs[0].scale = sa;
        cs[1].x = yx;
        cs[1].y = yy;
        cs[1].scale = ra;
        cs[2].origin = true;
        cs[2].floor = eps0;
        cell_points(d_, cs, cfg_.rule, [&](double zx, double zy, double zp, double w) {
          const double zp2 = zp * zp;
          const double rz = std::sqrt(zx * zx + zy * zy + zp2);
          const double dx = std::sqrt((zx - rho) * (zx - rho) + zy * zy + zp2);
          const double dy = std::sqrt((zx - yx) * (zx - yx) + (zy - yy) * (zy - yy) + zp2);
          const double lrz = std::log(rz);
          const double q = alpha_ == 1.0 ? 1.0 / rz : std::exp(-alpha_ * lrz);
          const double wt = pref * w * q * fk->p(s, dx) * fk->p(1.0 - s, dy);
          if (wt == 0.0) return;
          auto st = ext_.stencil(lrz - lra);
          ang_.weights((zx * yx + zy * yy) / (rz * r), wc.data());
          for (int a = 0; a < st.count; ++a) {
            double* row = &acc[(st.first + a) * nt];
            const double wa = wt * st.w[a];
            for (int k = 0; k < nt; ++k) row[k] += wa * wc[k];
          }
        });
        // second argument y_s
        auto sy = rg_.stencil(std::log(r) - lra);
        for (int e = 0; e < ext_.n; ++e) {
          const int i = e - V_;
          for (int k = 0; k < nt; ++k) {
            const double a = acc[e * nt + k];
            if (a == 0.0) continue;
            for (int b = 0; b < sy.count; ++b) {
              const int j = sy.first + b;
              const double v = a * sy.w[b];
              if (i >= 0) M1_(g, index(i, j, k)) += v;
              else Mv_(g, (-i - 1) * nb + j * nt + k) += v;
            }
          }
        }
        // |z| < eps0: bridge frozen at z = 0, T(z_s) = T(rho_min) (|z_s|/rho_min)^{-delta}, angle averaged;
        // the delta-dependent factor e^{delta h V}/(d - alpha - delta) is applied in effective()
        const double b0 = fk->p(s, rho) * fk->p(1.0 - s, r);
        const double coef = pref * b0 * sph * std::pow(eps0, d_ - alpha_);
        for (int b = 0; b < sy.count; ++b)
          for (int k = 0; k < nt; ++k) Md_(g, (sy.first + b) * nt + k) += coef * sy.w[b] * avg[k];
      }
    });
  }

  void save(const std::filesystem::path& file) const {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    const std::string key = cfg_.key(d_, alpha_);
    const std::uint64_t n = key.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(key.data(), static_cast<std::streamsize>(n));
    for (const Eigen::MatrixXd* m : {&M1_, &Mv_, &Md_})
      out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
    out.close();
    if (out) std::filesystem::rename(tmp, file, ec);
  }

  static std::shared_ptr<RatioOperator> load(const std::filesystem::path& file, int d, double alpha,
                                             const TableConfig& cfg) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return nullptr;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    const std::string want = cfg.key(d, alpha);
    if (!in || n != want.size()) return nullptr;
    std::string key(n, '\0');
    in.read(key.data(), static_cast<std::streamsize>(n));
    if (!in || key != want) return nullptr;
    std::shared_ptr<RatioOperator> op(new RatioOperator(d, alpha, cfg, 0));
    const int nb = op->rg_.n * op->ang_.n;
    op->M1_.resize(op->G_, op->G_);
    op->Mv_.resize(op->G_, op->V_ * nb);
    op->Md_.resize(op->G_, nb);
    for (Eigen::MatrixXd* m : {&op->M1_, &op->Mv_, &op->Md_})
      in.read(reinterpret_cast<char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
    if (!in) return nullptr;
    return op;
  }

  int d_;
  double alpha_;
  TableConfig cfg_;
  AngularBasis ang_;
  UniformGrid rg_, ext_;
  int V_ = 0, G_ = 0;
  std::vector<std::tuple<double, double, double>> nodes_;
  Eigen::MatrixXd M1_, Mv_, Md_;
};

/// Values of a ratio-table vector (T, or a single series term) off the nodes.
class RatioField {
 public:
  RatioField(std::shared_ptr<const RatioOperator> op, Eigen::VectorXd values, double delta)
      : op_(std::move(op)), v_(std::move(values)), delta_(delta) {}

  const Eigen::VectorXd& values() const { return v_; }

  /// Ratio at radii (rho, r) and cos-angle c; power-law closure below rho_min, constant above rho_max.
  double operator()(double rho, double r, double c) const {
    if (rho > r) std::swap(rho, r);
    const UniformGrid& g = op_->radial();
    const double rmin = std::exp(g.u0);
    double f = 1.0;
    if (rho < rmin) { f *= std::pow(rho / rmin, -delta_); rho = rmin; }
    if (r < rmin) { f *= std::pow(r / rmin, -delta_); r = rmin; }
    auto si = g.stencil(std::log(rho)), sj = g.stencil(std::log(r));
    const AngularBasis& ang = op_->angular();
    double wc[32];
    ang.weights(c, wc);
    double s = 0.0;
    for (int a = 0; a < si.count; ++a)
      for (int b = 0; b < sj.count; ++b) {
        const double w = si.w[a] * sj.w[b];
        const int i = si.first + a, j = sj.first + b;
        for (int k = 0; k < ang.n; ++k) s += w * wc[k] * v_[op_->index(i, j, k)];
      }
    return f * s;
  }

 private:
  std::shared_ptr<const RatioOperator> op_;
  Eigen::VectorXd v_;
  double delta_;
};

}  // namespace hardyheat
