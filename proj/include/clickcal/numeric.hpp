#pragma once
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace clickcal {

/// Neumaier-compensated accumulator for sums with heavy cancellation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// Exact for the small arguments used here (n <= 64).
inline double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// Ratio C(n-k, l) / C(n, l) as a cancellation-free product; zero once k > n-l.
inline double binomial_kernel_ratio(int n, int k, int l) {
  if (l == 0) return 1.0;
  if (k > n - l) return 0.0;
  double r = 1.0;
  for (int i = 0; i < l; ++i)
    r *= static_cast<double>(n - k - i) / static_cast<double>(n - i);
  return r;
}

/// Poisson probabilities p(0..n_max); the deficit 1 - sum is the truncation tail.
inline std::vector<double> poisson_pmf(double mean, int n_max) {
  if (mean < 0.0 || !std::isfinite(mean)) throw std::invalid_argument("poisson_pmf: mean must be finite and >= 0");
  if (n_max < 0) throw std::invalid_argument("poisson_pmf: n_max must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double lp = (mean == 0.0) ? (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity())
                                    : (n * std::log(mean) - mean - log_factorial(n));
    p[static_cast<std::size_t>(n)] = std::exp(lp);
  }
  return p;
}

namespace detail {

inline double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance abs_tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol,
                               int max_depth = 48) {
  if (!(b >= a)) throw std::invalid_argument("adaptive_simpson: requires b >= a");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

inline bool nearly_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace clickcal
