#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <vector>

#include "core.hpp"

namespace hardyheat {

struct GaussRule {
  std::vector<double> x;  ///< nodes on [-1, 1]
  std::vector<double> w;
};

/// Gauss-Legendre rule with n nodes (Newton on the three-term recurrence); cached, n <= 128.
inline const GaussRule& gauss_legendre(int n) {
  static std::array<GaussRule, 129> cache;
  static std::array<std::once_flag, 129> flags;
  if (n < 1 || n > 128) throw DomainError("gauss_legendre: n out of range");
  std::call_once(flags[n], [n] {
    GaussRule& r = cache[n];
    r.x.resize(n);
    r.w.resize(n);
    auto legendre = [n](double z, double& dp) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n == 1 ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
      return p1;
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double dz = legendre(z, dp) / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      legendre(z, dp);
      double wi = 2.0 / ((1.0 - z * z) * dp * dp);
      r.x[i] = -z;
      r.x[n - 1 - i] = z;
      r.w[i] = wi;
      r.w[n - 1 - i] = wi;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
  });
  return cache[n];
}

/// Gauss-Legendre on [a, b]; calls f(x, w).
template <class F>
inline void gauss_on(double a, double b, int n, F&& f) {
  const GaussRule& g = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) f(m + h * g.x[i], h * g.w[i]);
}

template <class F>
inline double integrate_gl(double a, double b, int n, F&& f) {
  double s = 0.0;
  gauss_on(a, b, n, [&](double x, double w) { s += w * f(x); });
  return s;
}

/// A centre of a Voronoi cell of the integration plane.
/// Peak: integrand concentrated at the centre with width `scale` (radial map u = scale*sinh v).
/// Origin: integrable power singularity at the centre (radial map u = e^v down to `floor`).
struct CellCenter {
  double x = 0.0, y = 0.0;
  double scale = 1.0;
  bool origin = false;
  double floor = 0.0;  ///< origin cells: inner radius; the disk inside is left to the caller
};

struct CellRule {
  int n_phi = 8;       ///< Gauss nodes per angular panel
  int n_rad = 8;       ///< Gauss nodes per radial panel
  int n_psi = 8;       ///< out-of-plane nodes (d >= 3)
  double far = 1e9;    ///< radial cut-off in units of the largest length scale
  double max_dphi = 0.6 * pi;
  double v_panel = 2.5;  ///< radial panel width in the mapped variable
};

/// Nodes on (0, 1) for integrands with power-type behaviour at both ends: geometric
/// panels toward 0 down to `lo0` and toward 1 down to 1 - `lo1`, `n` Gauss nodes per panel.
inline std::vector<std::pair<double, double>> graded_unit_interval(double lo0, double lo1, double ratio = 0.15,
                                                                     int n = 6) {
  // 1 - s must stay representable with a few correct digits
  lo1 = std::max(lo1, 1e-13);
  std::vector<double> b{0.0};
  std::vector<double> lower;
  for (double s = 0.5; s > lo0; s *= ratio) lower.push_back(s);
  std::reverse(lower.begin(), lower.end());
  b.insert(b.end(), lower.begin(), lower.end());
  if (b.back() < 0.5) b.push_back(0.5);
  for (double e = 0.5 * ratio; e > lo1; e *= ratio) b.push_back(1.0 - e);
  b.push_back(1.0);
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k + 1 < b.size(); ++k)
    gauss_on(b[k], b[k + 1], n, [&](double s, double w) { out.emplace_back(s, w); });
  return out;
}

namespace detail {

inline double wrap_angle(double a) {
  while (a < 0.0) a += 2.0 * pi;
  while (a >= 2.0 * pi) a -= 2.0 * pi;
  return a;
}

inline void uniq_sorted(std::vector<double>& v, double eps) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double a : v)
    if (out.empty() || a - out.back() > eps) out.push_back(a);
  v.swap(out);
}

}  // namespace detail

/// Quadrature points for the integral over R^d of a function whose features sit at
/// coplanar centres. Points are reported as in-plane coordinates (zx, zy), the
/// out-of-plane distance zp and the measure weight; emit(zx, zy, zp, w).
template <class Emit>
inline void cell_points(int d, const std::vector<CellCenter>& cs_in, const CellRule& rule, Emit&& emit) {
  // A peak wider than its distance to a sharper centre is resolved by that centre's map.
  std::vector<CellCenter> cs;
  for (std::size_t i = 0; i < cs_in.size(); ++i) {
    bool absorbed = false;
    if (!cs_in[i].origin)
      for (std::size_t j = 0; j < cs_in.size() && !absorbed; ++j) {
        if (j == i) continue;
        double D = std::hypot(cs_in[j].x - cs_in[i].x, cs_in[j].y - cs_in[i].y);
        bool sharper = cs_in[j].origin || cs_in[j].scale < cs_in[i].scale ||
                       (cs_in[j].scale == cs_in[i].scale && j < i);
        if (sharper && D < cs_in[i].scale) absorbed = true;
      }
    if (!absorbed) cs.push_back(cs_in[i]);
  }
  const int nc = static_cast<int>(cs.size());
  double Lmax = 0.0;
  for (const auto& c : cs_in) Lmax = std::max({Lmax, std::hypot(c.x, c.y), c.scale});
  const double ufar = rule.far * std::max(Lmax, 1e-300);

  // Out-of-plane directions: omega = (sin psi * e_phi, cos psi * eta)
  std::vector<double> psi_s{1.0}, psi_c{0.0}, psi_w{1.0};
  if (d >= 3) {
    psi_s.clear(); psi_c.clear(); psi_w.clear();
    const double sd3 = d == 3 ? 2.0 : sphere_area(d - 2);
    // cluster nodes toward the plane (psi = pi/2) where cell geometry varies
    gauss_on(0.0, 1.0, rule.n_psi, [&](double t, double wt) {
      double psi = 0.5 * pi * (1.0 - (1.0 - t) * (1.0 - t));
      double dpsi = pi * (1.0 - t) * wt;
      double s = std::sin(psi), c = std::cos(psi);
      psi_s.push_back(s);
      psi_c.push_back(c);
      psi_w.push_back(sd3 * s * std::pow(c, d - 3) * dpsi);
    });
  }

  for (int i = 0; i < nc; ++i) {
    const CellCenter& ci = cs[i];
    std::vector<double> dx, dy, D2;
    // angular breakpoints; graded ones are where the cell boundary is singular in phi
    std::vector<std::pair<double, bool>> brk;
    for (int j = 0; j < nc; ++j) {
      if (j == i) continue;
      double ax = cs[j].x - ci.x, ay = cs[j].y - ci.y;
      dx.push_back(ax);
      dy.push_back(ay);
      D2.push_back(ax * ax + ay * ay);
      double th = std::atan2(ay, ax);
      brk.emplace_back(detail::wrap_angle(th), false);
      brk.emplace_back(detail::wrap_angle(th + 0.5 * pi), true);
      brk.emplace_back(detail::wrap_angle(th - 0.5 * pi), true);
    }
    // Voronoi vertices: circumcentres of (i, j, k)
    for (std::size_t a = 0; a < dx.size(); ++a)
      for (std::size_t b = a + 1; b < dx.size(); ++b) {
        double det = 2.0 * (dx[a] * dy[b] - dy[a] * dx[b]);
        if (std::abs(det) < 1e-14 * (D2[a] + D2[b])) continue;
        double vx = (D2[a] * dy[b] - D2[b] * dy[a]) / det;
        double vy = (dx[a] * D2[b] - dx[b] * D2[a]) / det;
        brk.emplace_back(detail::wrap_angle(std::atan2(vy, vx)), true);
      }
    std::sort(brk.begin(), brk.end());
    {
      std::vector<std::pair<double, bool>> u;
      for (auto& b : brk) {
        if (!u.empty() && b.first - u.back().first <= 1e-12) u.back().second = u.back().second || b.second;
        else u.push_back(b);
      }
      if (u.size() > 1 && u.front().first + 2.0 * pi - u.back().first <= 1e-12) {
        u.front().second = u.front().second || u.back().second;
        u.pop_back();
      }
      brk.swap(u);
    }
    if (brk.empty()) brk.emplace_back(0.0, false);
    struct Panel { double a, b; bool ga, gb; };
    std::vector<Panel> panels;
    for (std::size_t k = 0; k < brk.size(); ++k) {
      double a = brk[k].first;
      double b = k + 1 < brk.size() ? brk[k + 1].first : brk[0].first + 2.0 * pi;
      bool ga = brk[k].second, gb = k + 1 < brk.size() ? brk[k + 1].second : brk[0].second;
      int m = std::max(1, static_cast<int>(std::ceil((b - a) / rule.max_dphi - 1e-12)));
      for (int q = 0; q < m; ++q)
        panels.push_back({a + (b - a) * q / m, a + (b - a) * (q + 1) / m, q == 0 && ga, q == m - 1 && gb});
    }

    for (const Panel& pn : panels) {
      const double pa = pn.a, pb = pn.b;
      gauss_on(0.0, 1.0, rule.n_phi, [&](double tau, double wtau) {
        double g = tau, dg = 1.0;
        if (pn.ga && pn.gb) { g = tau * tau * (3.0 - 2.0 * tau); dg = 6.0 * tau * (1.0 - tau); }
        else if (pn.ga) { g = tau * tau; dg = 2.0 * tau; }
        else if (pn.gb) { g = 1.0 - (1.0 - tau) * (1.0 - tau); dg = 2.0 * (1.0 - tau); }
        const double phi = pa + (pb - pa) * g;
        const double wphi = (pb - pa) * dg * wtau;
        const double cph = std::cos(phi), sph = std::sin(phi);
        for (std::size_t ip = 0; ip < psi_s.size(); ++ip) {
          const double sp = psi_s[ip], cp = psi_c[ip];
          const double ox = sp * cph, oy = sp * sph;
          double umax = ufar;
          for (std::size_t j = 0; j < dx.size(); ++j) {
            double proj = ox * dx[j] + oy * dy[j];
            if (proj > 0.0) umax = std::min(umax, 0.5 * D2[j] / proj);
          }
          const double wdir = wphi * psi_w[ip];
          auto put = [&](double u, double wu) {
            double jac = wdir * wu;
            for (int k = 1; k < d; ++k) jac *= u;
            emit(ci.x + u * ox, ci.y + u * oy, u * cp, jac);
          };
          if (ci.origin) {
            double lo = std::log(std::max(ci.floor, 1e-300));
            double hi = std::log(umax);
            if (hi <= lo) continue;
            int np = std::max(1, static_cast<int>(std::ceil((hi - lo) / (1.2 * rule.v_panel))));
            for (int q = 0; q < np; ++q) {
              double a = lo + (hi - lo) * q / np, b = lo + (hi - lo) * (q + 1) / np;
              gauss_on(a, b, rule.n_rad, [&](double v, double wv) {
                double u = std::exp(v);
                put(u, wv * u);
              });
            }
          } else {
            double sg = ci.scale;
            for (double D2j : D2) sg = std::min(sg, 0.5 * std::sqrt(D2j));
            double vmax = std::asinh(umax / sg);
            std::vector<double> vb{0.0};
            for (double vv : {1.0, 2.5}) if (vv < vmax) vb.push_back(vv);
            for (double D2j : D2) {
              double vj = std::asinh(std::sqrt(D2j) / sg);
              if (vj < vmax) vb.push_back(vj);
            }
            vb.push_back(vmax);
            detail::uniq_sorted(vb, 1e-9);
            for (std::size_t q = 0; q + 1 < vb.size(); ++q) {
              double a = vb[q], b = vb[q + 1];
              int np = std::max(1, static_cast<int>(std::ceil((b - a) / rule.v_panel)));
              for (int r = 0; r < np; ++r) {
                double aa = a + (b - a) * r / np, bb = a + (b - a) * (r + 1) / np;
                gauss_on(aa, bb, rule.n_rad, [&](double v, double wv) {
                  const double e = std::exp(v), ie = 1.0 / e;
                  put(0.5 * sg * (e - ie), 0.5 * wv * sg * (e + ie));
                });
              }
            }
          }
        }
      });
    }
  }
}

/// Sum of f(zx, zy, zp) over cell_points.
template <class F>
inline double integrate_cells(int d, const std::vector<CellCenter>& cs, const CellRule& rule, F&& f) {
  double s = 0.0;
  cell_points(d, cs, rule, [&](double zx, double zy, double zp, double w) { s += w * f(zx, zy, zp); });
  return s;
}

}  // namespace hardyheat
