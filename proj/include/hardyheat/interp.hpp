#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "core.hpp"

namespace hardyheat {

/// Uniform grid u_i = u0 + i h, i in [0, n), with an `order`-point interpolation stencil (4 or 6).
struct UniformGrid {
  double u0 = 0.0, h = 1.0;
  int n = 0;
  int order = 4;  ///< 2, 4 or 6

  double node(int i) const { return u0 + i * h; }
  double top() const { return u0 + (n - 1) * h; }

  static double inv_denominator(int order, int a) {
    // 1 / prod_{b != a} (a - b) = (-1)^{order-1-a} / (a! (order-1-a)!)
    static constexpr double fact[7] = {1, 1, 2, 6, 24, 120, 720};
    const double v = 1.0 / (fact[a] * fact[order - 1 - a]);
    return ((order - 1 - a) % 2) ? -v : v;
  }

  struct Stencil {
    int first = 0;  ///< index of the first of `count` nodes
    int count = 0;
    std::array<double, 6> w{};
  };

  /// Values beyond either end are held constant; near the ends the stencil is one-sided.
  Stencil stencil(double u) const {
    Stencil s;
    if (n < order) throw DomainError("UniformGrid has fewer nodes than its stencil");
    if (u <= u0) { s.first = 0; s.count = 1; s.w[0] = 1.0; return s; }
    if (u >= top()) { s.first = n - 1; s.count = 1; s.w[0] = 1.0; return s; }
    const double x = (u - u0) / h;
    const int half = order / 2;
    const int i = std::clamp(static_cast<int>(x), half - 1, n - 1 - half);
    s.first = i - half + 1;
    s.count = order;
    const double f = x - s.first;  // position relative to the first node
    // w_a = prod_{b != a} (f - b) / prod_{b != a} (a - b), via prefix and suffix products
    std::array<double, 7> pre{}, suf{};
    pre[0] = 1.0;
    for (int a = 0; a < order; ++a) pre[a + 1] = pre[a] * (f - a);
    suf[order] = 1.0;
    for (int a = order - 1; a >= 0; --a) suf[a] = suf[a + 1] * (f - a);
    for (int a = 0; a < order; ++a) s.w[a] = pre[a] * suf[a + 1] * inv_denominator(order, a);
    return s;
  }
};

}  // namespace hardyheat
