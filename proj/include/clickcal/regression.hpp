#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clickcal/fitting.hpp"
#include "clickcal/moments.hpp"

namespace clickcal {

/// Mean photon number per pulse from the referenced power, n = chi * P.
inline double power_to_photons(double power_nw, double chi_per_nw) {
  if (!(power_nw >= 0.0)) throw std::invalid_argument("power_to_photons: power must be >= 0");
  if (!(chi_per_nw > 0.0)) throw std::invalid_argument("power_to_photons: chi must be > 0");
  return chi_per_nw * power_nw;
}

/// Response values of one detector mode at one polarization, over power.
struct ResponseCurve {
  std::string mode;
  double phi_deg = 0.0;
  int bins = 1;
  std::vector<ResponsePoint> points;

  /// Points sorted by power; fits require strictly increasing powers after sort.
  void sort_by_power() {
    std::sort(points.begin(), points.end(),
              [](const ResponsePoint& a, const ResponsePoint& b) { return a.power_nw < b.power_nw; });
  }
};

namespace detail {

struct CurveArrays {
  std::vector<double> x;   // P / N
  std::vector<double> sx;  // sigma_P / N
  std::vector<double> y;   // gamma
  std::vector<double> sy;  // sigma_gamma
};

inline CurveArrays curve_arrays(const ResponseCurve& curve) {
  CurveArrays a;
  const double n = static_cast<double>(curve.bins);
  a.x.reserve(curve.points.size());
  for (const auto& p : curve.points) {
    a.x.push_back(p.power_nw / n);
    a.sx.push_back(p.power_err_nw / n);
    a.y.push_back(p.gamma);
    a.sy.push_back(p.gamma_err);
  }
  return a;
}

}  // namespace detail

/// Taylor expansion of the response in P/N: weighted polynomial least squares
/// up to the requested order (<= 3). Point weights come from gamma errors.
inline PolyFit taylor_fit(const ResponseCurve& curve, int order) {
  if (order < 1 || order > 3) throw std::invalid_argument("taylor_fit: order must be in 1..3");
  if (curve.points.size() < static_cast<std::size_t>(order) + 1)
    throw std::invalid_argument("taylor_fit: needs at least order+1 points");
  const auto a = detail::curve_arrays(curve);
  return weighted_polyfit(a.x, a.y, a.sy, order);
}

struct NonlinearityRatios {
  double r2 = 0.0;  // quadratic / linear coefficient
  double r2_err = 0.0;
  double r3 = 0.0;  // cubic / linear coefficient
  double r3_err = 0.0;
};

/// Ratios of higher Taylor coefficients to the linear one; the device is
/// linear when both are consistent with zero.
inline NonlinearityRatios nonlinearity_ratios(const PolyFit& fit) {
  if (fit.order < 3) throw std::invalid_argument("nonlinearity_ratios: needs an order-3 fit");
  const double c1 = fit.coeffs[1];
  if (c1 == 0.0) throw std::invalid_argument("nonlinearity_ratios: vanishing linear coefficient");
  NonlinearityRatios r;
  r.r2 = fit.coeffs[2] / c1;
  r.r3 = fit.coeffs[3] / c1;
  const double s1 = fit.coeff_errs[1], s2 = fit.coeff_errs[2], s3 = fit.coeff_errs[3];
  r.r2_err = std::abs(r.r2) == 0.0 && s2 == 0.0
                 ? 0.0
                 : std::sqrt((s2 * s2 + r.r2 * r.r2 * s1 * s1) / (c1 * c1));
  r.r3_err = std::abs(r.r3) == 0.0 && s3 == 0.0
                 ? 0.0
                 : std::sqrt((s3 * s3 + r.r3 * r.r3 * s1 * s1) / (c1 * c1));
  return r;
}

/// Errors-in-variables slope of the response curve through the origin,
/// in units of 1/nW (per P/N).
inline LineFit wtls_line_through_origin(const ResponseCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("wtls_line_through_origin: empty curve");
  const auto a = detail::curve_arrays(curve);
  return wtls_line_through_origin(a.x, a.sx, a.y, a.sy);
}

/// Quantum efficiency from the fitted slope, eta = eta_tilde / chi, with
/// first-order error propagation over both inputs.
inline std::pair<double, double> efficiency_from_slope(double eta_tilde, double sigma_eta_tilde, double chi_per_nw,
                                                       double sigma_chi) {
  if (!(chi_per_nw > 0.0)) throw std::invalid_argument("efficiency_from_slope: chi must be > 0");
  const double eta = eta_tilde / chi_per_nw;
  const double rel_slope = eta_tilde != 0.0 ? sigma_eta_tilde / eta_tilde : 0.0;
  const double rel_chi = sigma_chi / chi_per_nw;
  const double sigma = std::abs(eta) * std::sqrt(rel_slope * rel_slope + rel_chi * rel_chi);
  return {eta, sigma};
}

/// Full calibration result for one (mode, polarization) response curve.
struct CalibrationReport {
  std::string mode;
  double phi_deg = 0.0;
  int bins = 1;
  int order = 1;  // moment order l used for gamma extraction

  // Free-intercept line fit (dark-count estimate).
  double free_slope = 0.0;
  double free_slope_err = 0.0;
  double nu_tilde = 0.0;
  double nu_tilde_err = 0.0;
  bool intercept_consistent_zero = false;

  // Headline slope. In the default policy this is the through-origin
  // errors-in-variables refit; eta_tilde is in 1/nW (per P/N).
  double eta_tilde = 0.0;
  double eta_tilde_err = 0.0;
  bool used_zero_intercept = true;
  double wtls_objective = 0.0;
  int wtls_iterations = 0;

  // Taylor expansion and nonlinearity check.
  PolyFit taylor;
  bool taylor_available = false;
  NonlinearityRatios ratios;
  bool ratios_available = false;

  // Physical efficiency.
  double chi_per_nw = 0.0;
  double chi_err_per_nw = 0.0;
  double eta = 0.0;     // dimensionless
  double eta_err = 0.0;

  int negative_gamma_points = 0;
  std::vector<std::string> flags;
  ResponseCurve curve;
};

/// Polarization dependence eta(phi) = (emax-emin)/2 cos[4(phi+phi0)] + (emax+emin)/2.
struct PolarizationFit {
  double eta_max = 0.0;
  double eta_max_err = 0.0;
  double eta_min = 0.0;
  double eta_min_err = 0.0;
  double phi0_deg = 0.0;  // reported in (-22.5, 22.5]
  double phi0_err_deg = 0.0;
  double amplitude = 0.0;  // (eta_max - eta_min) / 2
  double weighted_ssr = 0.0;
  bool degenerate_amplitude = false;  // constant data; phi0 fixed to 0 by convention
};

namespace detail {

inline double fold_phi0_deg(double phi) {
  double r = std::fmod(phi + 22.5, 45.0);
  if (r < 0.0) r += 45.0;
  return r == 0.0 ? 22.5 : r - 22.5;
}

}  // namespace detail

/// Fit the cosine model by linearization eta = A cos(4 phi) + B sin(4 phi) + D,
/// then eta_max = D + R, eta_min = D - R, phi0 = -atan2(B, A)/4 with
/// R = sqrt(A^2 + B^2) and phi0 folded into (-22.5, 22.5] degrees.
inline PolarizationFit cosine_efficiency_fit(std::span<const double> phi_deg, std::span<const double> eta,
                                             std::span<const double> sigma_eta) {
  const std::size_t n = phi_deg.size();
  if (eta.size() != n || (!sigma_eta.empty() && sigma_eta.size() != n))
    throw std::invalid_argument("cosine_efficiency_fit: input spans must have equal length");
  if (n < 3) throw std::invalid_argument("cosine_efficiency_fit: needs at least 3 points");

  // Distinct angles modulo 90 degrees (the model period).
  std::vector<double> folded;
  for (double p : phi_deg) {
    double f = std::fmod(p, 90.0);
    if (f < 0.0) f += 90.0;
    bool fresh = true;
    for (double g : folded)
      if (std::abs(f - g) < 1e-9 || std::abs(std::abs(f - g) - 90.0) < 1e-9) fresh = false;
    if (fresh) folded.push_back(f);
  }
  if (folded.size() < 3) throw std::invalid_argument("cosine_efficiency_fit: needs >= 3 distinct angles modulo 90 deg");

  constexpr double kDegToRad = 0.017453292519943295;
  const int dim = 3;
  std::vector<double> ata(9, 0.0), atb(3, 0.0);
  bool unit_weights = sigma_eta.empty();
  if (!unit_weights) {
    bool any = false;
    for (double s : sigma_eta) {
      if (!(s >= 0.0)) throw std::invalid_argument("cosine_efficiency_fit: sigma must be >= 0");
      if (s > 0.0) any = true;
    }
    if (!any) unit_weights = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = 4.0 * phi_deg[i] * kDegToRad;
    const double basis[3] = {std::cos(arg), std::sin(arg), 1.0};
    const double w = unit_weights ? 1.0 : 1.0 / (sigma_eta[i] * sigma_eta[i]);
    for (int r = 0; r < dim; ++r) {
      atb[static_cast<std::size_t>(r)] += w * basis[r] * eta[i];
      for (int c = 0; c < dim; ++c) ata[static_cast<std::size_t>(r) * dim + c] += w * basis[r] * basis[c];
    }
  }
  std::vector<double> coef = atb;
  detail::solve_and_invert(ata, coef, dim, "cosine_efficiency_fit");
  const double A = coef[0], B = coef[1], D = coef[2];

  CompensatedSum ssr;
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = 4.0 * phi_deg[i] * kDegToRad;
    const double r = eta[i] - (A * std::cos(arg) + B * std::sin(arg) + D);
    const double w = unit_weights ? 1.0 : 1.0 / (sigma_eta[i] * sigma_eta[i]);
    ssr.add(w * r * r);
  }
  const double cov_scale = unit_weights ? (n > 3 ? std::max(ssr.value(), 0.0) / static_cast<double>(n - 3) : 0.0) : 1.0;
  auto cov = [&](int r, int c) { return ata[static_cast<std::size_t>(r) * dim + c] * cov_scale; };

  PolarizationFit fit;
  fit.weighted_ssr = std::max(ssr.value(), 0.0);
  const double r2 = A * A + B * B;
  const double radius = std::sqrt(r2);
  fit.amplitude = radius;
  fit.eta_max = D + radius;
  fit.eta_min = D - radius;

  const double scale = std::abs(D) + radius;
  if (radius <= 1e-12 * std::max(scale, 1e-300)) {
    fit.degenerate_amplitude = true;
    fit.phi0_deg = 0.0;
    fit.eta_max = fit.eta_min = D;
    fit.eta_max_err = fit.eta_min_err = std::sqrt(std::max(cov(2, 2), 0.0));
    fit.phi0_err_deg = 0.0;
    return fit;
  }

  fit.phi0_deg = detail::fold_phi0_deg(-std::atan2(B, A) / 4.0 / kDegToRad);

  // First-order propagation through (A, B, D) -> (eta_max, eta_min, phi0).
  auto quad_form = [&](const double g[3]) {
    double s = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) s += g[r] * cov(r, c) * g[c];
    return std::sqrt(std::max(s, 0.0));
  };
  const double gmax[3] = {A / radius, B / radius, 1.0};
  const double gmin[3] = {-A / radius, -B / radius, 1.0};
  const double gphi[3] = {B / (4.0 * r2) / kDegToRad, -A / (4.0 * r2) / kDegToRad, 0.0};
  fit.eta_max_err = quad_form(gmax);
  fit.eta_min_err = quad_form(gmin);
  fit.phi0_err_deg = quad_form(gphi);
  return fit;
}

}  // namespace clickcal
