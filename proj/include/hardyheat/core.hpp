#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardyheat {

using Vec = std::vector<double>;

/// Invalid parameters or arguments outside an operation's domain.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A quadrature that could not reach its tolerance.
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wall-clock budget exhausted.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { ClosedForm, FourierInversion, Series, FixedPoint, MonteCarlo };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed-form";
    case Method::FourierInversion: return "fourier-inversion";
    case Method::Series: return "series";
    case Method::FixedPoint: return "fixed-point";
    case Method::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

struct KernelValue {
  double value = 0.0;
  double abs_error = 0.0;
  Method method = Method::ClosedForm;
};

inline double norm(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double dist(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DomainError("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Wall-clock deadline shared by long computations; infinite unless set.
class Budget {
 public:
  Budget() = default;
  explicit Budget(double seconds) {
    if (seconds > 0.0)
      end_ = std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
    limited_ = seconds > 0.0;
  }
  bool exceeded() const { return limited_ && std::chrono::steady_clock::now() > end_; }
  void check(const char* what) const {
    if (exceeded()) throw BudgetExceeded(std::string("budget exceeded in ") + what);
  }

 private:
  bool limited_ = false;
  std::chrono::steady_clock::time_point end_{};
};

inline constexpr double pi = 3.14159265358979323846;

/// Surface area of the unit sphere S^{d-1}.
inline double sphere_area(int d) {
  return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace hardyheat
