#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickcal/numeric.hpp"

namespace clickcal {

/// Result of a weighted polynomial least-squares fit.
struct PolyFit {
  int order = 0;
  std::vector<double> coeffs;      // c_0 .. c_order
  std::vector<double> coeff_errs;  // 1-sigma standard errors
  std::vector<double> cov;         // (order+1)^2 covariance, row-major
  double weighted_ssr = 0.0;       // sum of squared standardized residuals
  int n_points = 0;
  bool unit_weights = false;       // set when no y-errors were supplied

  double covariance(int i, int j) const { return cov[static_cast<std::size_t>(i) * (order + 1) + j]; }
};

/// Errors-in-variables straight line through the origin.
struct LineFit {
  double slope = 0.0;
  double slope_err = 0.0;
  int iterations = 0;
  double objective = 0.0;  // value of the minimized chi-square
};

namespace detail {

/// Solve A x = b and invert A in place (Gauss-Jordan with partial pivoting).
/// A is a small dense matrix (dim <= 4 in this library).
inline void solve_and_invert(std::vector<double>& a, std::vector<double>& b, int dim, const char* what) {
  std::vector<double> inv(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) inv[static_cast<std::size_t>(i) * dim + i] = 1.0;
  auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * dim + c]; };
  auto I = [&](int r, int c) -> double& { return inv[static_cast<std::size_t>(r) * dim + c]; };

  for (int col = 0; col < dim; ++col) {
    int pivot = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
    if (!(std::abs(A(pivot, col)) > 0.0)) throw std::runtime_error(std::string(what) + ": rank-deficient design");
    if (pivot != col) {
      for (int c = 0; c < dim; ++c) {
        std::swap(A(pivot, c), A(col, c));
        std::swap(I(pivot, c), I(col, c));
      }
      std::swap(b[static_cast<std::size_t>(pivot)], b[static_cast<std::size_t>(col)]);
    }
    const double d = A(col, col);
    for (int c = 0; c < dim; ++c) {
      A(col, c) /= d;
      I(col, c) /= d;
    }
    b[static_cast<std::size_t>(col)] /= d;
    for (int r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = A(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < dim; ++c) {
        A(r, c) -= f * A(col, c);
        I(r, c) -= f * I(col, c);
      }
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  a = std::move(inv);
}

}  // namespace detail

/// Weighted polynomial least squares y ~ sum_t c_t x^t with weights 1/sigma^2.
/// When sigma_y is empty (or all zero) the fit uses unit weights and scales the
/// covariance by the residual variance. With supplied errors the covariance is
/// (X^T W X)^{-1}, the known-sigma convention.
inline PolyFit weighted_polyfit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma_y,
                                int order) {
  const int n = static_cast<int>(x.size());
  const int dim = order + 1;
  if (order < 0) throw std::invalid_argument("weighted_polyfit: order must be >= 0");
  if (y.size() != x.size() || (!sigma_y.empty() && sigma_y.size() != x.size()))
    throw std::invalid_argument("weighted_polyfit: input spans must have equal length");
  if (n < dim) throw std::invalid_argument("weighted_polyfit: needs at least order+1 points");

  bool unit_weights = sigma_y.empty();
  if (!unit_weights) {
    bool any_positive = false;
    for (double s : sigma_y) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("weighted_polyfit: sigma_y must be finite and >= 0");
      if (s > 0.0) any_positive = true;
    }
    if (any_positive) {
      for (double s : sigma_y)
        if (s == 0.0) throw std::invalid_argument("weighted_polyfit: mixing zero and positive sigma_y is not supported");
    } else {
      unit_weights = true;
    }
  }

  // Scale x to [-1, 1]-ish for conditioning; unscale the coefficients after.
  double x_scale = 0.0;
  for (double xi : x) x_scale = std::max(x_scale, std::abs(xi));
  if (x_scale == 0.0) x_scale = 1.0;

  std::vector<double> ata(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> atb(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> powers(static_cast<std::size_t>(dim));
  for (int i = 0; i < n; ++i) {
    const double w = unit_weights ? 1.0 : 1.0 / (sigma_y[static_cast<std::size_t>(i)] * sigma_y[static_cast<std::size_t>(i)]);
    const double xs = x[static_cast<std::size_t>(i)] / x_scale;
    powers[0] = 1.0;
    for (int t = 1; t < dim; ++t) powers[static_cast<std::size_t>(t)] = powers[static_cast<std::size_t>(t - 1)] * xs;
    for (int r = 0; r < dim; ++r) {
      atb[static_cast<std::size_t>(r)] += w * powers[static_cast<std::size_t>(r)] * y[static_cast<std::size_t>(i)];
      for (int c = r; c < dim; ++c)
        ata[static_cast<std::size_t>(r) * dim + c] += w * powers[static_cast<std::size_t>(r)] * powers[static_cast<std::size_t>(c)];
    }
  }
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < r; ++c) ata[static_cast<std::size_t>(r) * dim + c] = ata[static_cast<std::size_t>(c) * dim + r];

  std::vector<double> coef = atb;
  detail::solve_and_invert(ata, coef, dim, "weighted_polyfit");  // ata now holds the inverse

  PolyFit fit;
  fit.order = order;
  fit.n_points = n;
  fit.unit_weights = unit_weights;
  fit.coeffs.resize(static_cast<std::size_t>(dim));
  fit.cov.assign(static_cast<std::size_t>(dim) * dim, 0.0);

  CompensatedSum ssr;
  for (int i = 0; i < n; ++i) {
    const double xs = x[static_cast<std::size_t>(i)] / x_scale;
    double fitted = 0.0;
    for (int t = order; t >= 0; --t) fitted = fitted * xs + coef[static_cast<std::size_t>(t)];
    const double w = unit_weights ? 1.0 : 1.0 / (sigma_y[static_cast<std::size_t>(i)] * sigma_y[static_cast<std::size_t>(i)]);
    const double r = y[static_cast<std::size_t>(i)] - fitted;
    ssr.add(w * r * r);
  }
  fit.weighted_ssr = std::max(ssr.value(), 0.0);

  // Residual-variance scaling only in the unit-weight case.
  const double cov_scale = unit_weights ? (n > dim ? fit.weighted_ssr / static_cast<double>(n - dim) : 0.0) : 1.0;

  for (int t = 0; t < dim; ++t) {
    const double unscale = std::pow(x_scale, -static_cast<double>(t));
    fit.coeffs[static_cast<std::size_t>(t)] = coef[static_cast<std::size_t>(t)] * unscale;
    for (int u = 0; u < dim; ++u) {
      const double unscale_u = std::pow(x_scale, -static_cast<double>(u));
      fit.cov[static_cast<std::size_t>(t) * dim + u] =
          ata[static_cast<std::size_t>(t) * dim + u] * unscale * unscale_u * cov_scale;
    }
  }
  fit.coeff_errs.resize(static_cast<std::size_t>(dim));
  for (int t = 0; t < dim; ++t)
    fit.coeff_errs[static_cast<std::size_t>(t)] = std::sqrt(std::max(fit.covariance(t, t), 0.0));
  return fit;
}

namespace detail {

struct WtlsDerivatives {
  double s = 0.0;
  double ds = 0.0;
  double d2s = 0.0;
};

inline WtlsDerivatives wtls_objective(std::span<const double> x, std::span<const double> sx, std::span<const double> y,
                                      std::span<const double> sy, double a) {
  WtlsDerivatives out;
  CompensatedSum s, ds, d2s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - a * x[i];
    double d = sy[i] * sy[i] + a * a * sx[i] * sx[i];
    if (d <= 0.0) d = 1e-300;
    const double sx2 = sx[i] * sx[i];
    s.add(r * r / d);
    ds.add(-2.0 * r * x[i] / d - 2.0 * a * sx2 * r * r / (d * d));
    d2s.add(2.0 * x[i] * x[i] / d - 2.0 * sx2 * r * r / (d * d) + 8.0 * a * sx2 * r * x[i] / (d * d) +
            8.0 * a * a * sx2 * sx2 * r * r / (d * d * d));
  }
  out.s = s.value();
  out.ds = ds.value();
  out.d2s = d2s.value();
  return out;
}

}  // namespace detail

/// Weighted total least squares for f(x) = a x: minimizes
///   S(a) = sum_i (y_i - a x_i)^2 / (sigma_y_i^2 + a^2 sigma_x_i^2)
/// by Newton steps on dS/da (each step re-evaluates the errors-in-variables
/// weights), to |da/a| < 1e-12 within 100 iterations. The slope error comes
/// from the curvature of the objective at the optimum, sigma_a^2 = 2 / S''.
inline LineFit wtls_line_through_origin(std::span<const double> x, std::span<const double> sigma_x,
                                        std::span<const double> y, std::span<const double> sigma_y) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("wtls_line_through_origin: needs at least one point");
  if (sigma_x.size() != n || y.size() != n || sigma_y.size() != n)
    throw std::invalid_argument("wtls_line_through_origin: input spans must have equal length");
  double sxx = 0.0, sxy = 0.0;
  bool all_exact = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma_x[i] >= 0.0) || !(sigma_y[i] >= 0.0))
      throw std::invalid_argument("wtls_line_through_origin: errors must be >= 0");
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    if (sigma_x[i] > 0.0 || sigma_y[i] > 0.0) all_exact = false;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("wtls_line_through_origin: all x are zero");

  LineFit fit;
  if (all_exact) {
    // Degenerate error-free input: plain least squares with residual-based error.
    fit.slope = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.slope * x[i];
      ssr += r * r;
    }
    fit.slope_err = n > 1 ? std::sqrt(ssr / static_cast<double>(n - 1) / sxx) : 0.0;
    fit.objective = ssr;
    return fit;
  }

  double a = sxy / sxx;  // ordinary least squares start
  constexpr int kMaxIter = 100;
  constexpr double kRelTol = 1e-12;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    const auto d = detail::wtls_objective(x, sigma_x, y, sigma_y, a);
    double step;
    if (d.d2s > 0.0) {
      step = -d.ds / d.d2s;
    } else {
      // Fall back to a damped gradient step if the curvature is unusable.
      step = -d.ds * (std::abs(a) + 1.0) / (std::abs(d.ds) + 1.0) * 0.5;
    }
    // Keep the step inside a sane trust region.
    const double cap = std::max(std::abs(a), 1.0);
    step = std::clamp(step, -cap, cap);
    a += step;
    if (std::abs(step) <= kRelTol * std::max(std::abs(a), 1e-300)) {
      ++it;
      break;
    }
  }
  if (it >= kMaxIter) throw std::runtime_error("wtls_line_through_origin: no convergence after 100 iterations");

  const auto d = detail::wtls_objective(x, sigma_x, y, sigma_y, a);
  fit.slope = a;
  fit.iterations = it;
  fit.objective = d.s;
  fit.slope_err = d.d2s > 0.0 ? std::sqrt(2.0 / d.d2s) : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace clickcal
