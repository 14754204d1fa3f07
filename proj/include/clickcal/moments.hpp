#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

#include "clickcal/histogram.hpp"
#include "clickcal/numeric.hpp"

namespace clickcal {

/// A normally ordered click moment sampled from a histogram.
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;  // standard error of the mean; 0 when total < 2
  int order_a = 0;
  int order_b = 0;
  double events = 0.0;
};

/// Detector response at a calibrated moment: gamma = -ln(m)/l with
/// first-order error propagation. Moments above 1 (possible under sampling
/// noise) give a negative gamma that is flagged, never clipped.
struct GammaEstimate {
  double gamma = 0.0;
  double gamma_err = 0.0;
  bool negative_flagged = false;
};

/// One calibration point of a response curve.
struct ResponsePoint {
  double power_nw = 0.0;
  double power_err_nw = 0.0;
  double gamma = 0.0;
  double gamma_err = 0.0;
  int order = 1;
  bool negative_flagged = false;
};

namespace detail {

template <typename KernelFn>
double histogram_mean(const JointClickHistogram& hist, KernelFn&& kernel) {
  CompensatedSum acc;
  for (int ka = 0; ka <= hist.bins_a; ++ka)
    for (int kb = 0; kb <= hist.bins_b; ++kb) acc.add(hist.at(ka, kb) * kernel(ka, kb));
  return acc.value() / hist.total;
}

template <typename KernelFn>
double histogram_std_error(const JointClickHistogram& hist, KernelFn&& kernel, double mean) {
  CompensatedSum acc;
  for (int ka = 0; ka <= hist.bins_a; ++ka)
    for (int kb = 0; kb <= hist.bins_b; ++kb) {
      const double d = kernel(ka, kb) - mean;
      acc.add(hist.at(ka, kb) / hist.total * d * d);
    }
  return std::sqrt(std::max(acc.value(), 0.0) / (hist.total - 1.0));
}

inline void check_orders(const JointClickHistogram& hist, int l_a, int l_b) {
  if (l_a < 0 || l_a > hist.bins_a || l_b < 0 || l_b > hist.bins_b)
    throw std::invalid_argument("sample_moment: orders must satisfy 0 <= l_j <= N_j");
}

}  // namespace detail

/// Sampled moment <: m_A^l_A m_B^l_B :> over a joint histogram. The kernel
/// C(N_A-k_A, l_A) C(N_B-k_B, l_B) / (C(N_A, l_A) C(N_B, l_B)) vanishes
/// outside k_j <= N_j - l_j.
inline MomentEstimate sample_moment(const JointClickHistogram& hist, int l_a, int l_b) {
  detail::check_orders(hist, l_a, l_b);
  if (!(hist.total >= 1.0)) throw std::invalid_argument("sample_moment: histogram must contain at least one event");
  const auto kernel = [&](int ka, int kb) {
    return binomial_kernel_ratio(hist.bins_a, ka, l_a) * binomial_kernel_ratio(hist.bins_b, kb, l_b);
  };
  MomentEstimate m;
  m.order_a = l_a;
  m.order_b = l_b;
  m.events = hist.total;
  m.value = detail::histogram_mean(hist, kernel);
  if (hist.total >= 2.0) m.std_error = detail::histogram_std_error(hist, kernel, m.value);
  return m;
}

/// Single-mode variant; the absent mode is used at order 0.
inline MomentEstimate sample_moment(const ClickHistogram& hist, int l) {
  const int n = hist.bins();
  if (n < 1) throw std::invalid_argument("sample_moment: histogram needs at least one bin");
  if (l < 0 || l > n) throw std::invalid_argument("sample_moment: order must satisfy 0 <= l <= N");
  if (!(hist.total >= 1.0)) throw std::invalid_argument("sample_moment: histogram must contain at least one event");
  MomentEstimate m;
  m.order_a = l;
  m.events = hist.total;
  CompensatedSum acc;
  for (int k = 0; k <= n; ++k) acc.add(hist.counts[static_cast<std::size_t>(k)] * binomial_kernel_ratio(n, k, l));
  m.value = acc.value() / hist.total;
  if (hist.total >= 2.0) {
    CompensatedSum var;
    for (int k = 0; k <= n; ++k) {
      const double d = binomial_kernel_ratio(n, k, l) - m.value;
      var.add(hist.counts[static_cast<std::size_t>(k)] / hist.total * d * d);
    }
    m.std_error = std::sqrt(std::max(var.value(), 0.0) / (hist.total - 1.0));
  }
  return m;
}

/// Standard error of the sampled mean, sigma / sqrt(C - 1); requires C >= 2.
inline double moment_std_error(const JointClickHistogram& hist, int l_a, int l_b) {
  if (!(hist.total >= 2.0)) throw std::invalid_argument("moment_std_error: needs at least two events");
  return sample_moment(hist, l_a, l_b).std_error;
}

inline double moment_std_error(const ClickHistogram& hist, int l) {
  if (!(hist.total >= 2.0)) throw std::invalid_argument("moment_std_error: needs at least two events");
  return sample_moment(hist, l).std_error;
}

/// Invert a sampled moment into a response value, gamma = -ln(m)/l.
inline GammaEstimate gamma_from_moment(const MomentEstimate& m) {
  const int l = std::max(m.order_a, m.order_b);
  if (l < 1) throw std::invalid_argument("gamma_from_moment: needs moment order >= 1");
  if (!(m.value > 0.0)) throw std::invalid_argument("gamma_from_moment: moment must be positive");
  GammaEstimate g;
  g.gamma = -std::log(m.value) / static_cast<double>(l);
  g.gamma_err = m.std_error / (static_cast<double>(l) * m.value);
  g.negative_flagged = g.gamma < 0.0;
  return g;
}

/// Bin-averaged response of an unequally split detector, recovered from the
/// order-N moment: -(1/N) ln <: m^N :>. For exact Poisson-binomial statistics
/// this equals the arithmetic mean of the per-bin responses.
inline double averaged_gamma_unequal_bins(const ClickHistogram& hist) {
  const int n = hist.bins();
  const MomentEstimate m = sample_moment(hist, n);
  if (!(m.value > 0.0)) throw std::invalid_argument("averaged_gamma_unequal_bins: order-N moment is not positive");
  return -std::log(m.value) / static_cast<double>(n);
}

}  // namespace clickcal
