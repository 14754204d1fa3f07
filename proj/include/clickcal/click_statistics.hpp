#pragma once
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickcal/model.hpp"
#include "clickcal/numeric.hpp"

namespace clickcal {

/// Joint click probabilities over (k_A, k_B), stored row-major in k_A.
struct JointDistribution {
  int bins_a = 0;
  int bins_b = 0;
  std::vector<double> p;

  double at(int ka, int kb) const { return p[static_cast<std::size_t>(ka) * (bins_b + 1) + kb]; }
  double& at(int ka, int kb) { return p[static_cast<std::size_t>(ka) * (bins_b + 1) + kb]; }
};

/// Click statistics of a coherent input on N equal bins:
/// c_k = C(N,k) p^(N-k) (1-p)^k with no-click probability p = exp(-gamma).
/// gamma = +inf is allowed and collapses the distribution onto k = N.
inline std::vector<double> coherent_click_distribution(double gamma, int bins) {
  if (bins < 1) throw std::invalid_argument("coherent_click_distribution: bins must be >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("coherent_click_distribution: gamma must be >= 0");
  const double p = std::exp(-gamma);
  const double q = -std::expm1(-gamma);  // 1 - p without cancellation
  std::vector<double> c(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k)
    c[static_cast<std::size_t>(k)] =
        binomial_coefficient(bins, k) * std::pow(p, static_cast<double>(bins - k)) * std::pow(q, static_cast<double>(k));
  return c;
}

/// Exact distribution of the number of clicking bins when bin i independently
/// stays silent with probability p_i. Evaluated by the O(N^2) convolution
/// recurrence; stable for the bin counts used here (N <= 64).
inline std::vector<double> poisson_binomial_click_distribution(std::span<const double> no_click_probs) {
  if (no_click_probs.empty()) throw std::invalid_argument("poisson_binomial_click_distribution: needs >= 1 bin");
  for (double p : no_click_probs)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("poisson_binomial_click_distribution: p_i must lie in [0, 1]");
  std::vector<double> c{1.0};
  c.reserve(no_click_probs.size() + 1);
  for (double p : no_click_probs) {
    const double q = 1.0 - p;
    c.push_back(0.0);
    for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k] * p + c[k - 1] * q;
    c[0] *= p;
  }
  return c;
}

/// Product statistics of two independent coherent-illuminated detectors.
inline JointDistribution joint_coherent_click_distribution(double gamma_a, int bins_a, double gamma_b, int bins_b) {
  const auto ca = coherent_click_distribution(gamma_a, bins_a);
  const auto cb = coherent_click_distribution(gamma_b, bins_b);
  JointDistribution joint;
  joint.bins_a = bins_a;
  joint.bins_b = bins_b;
  joint.p.resize(ca.size() * cb.size());
  for (int ka = 0; ka <= bins_a; ++ka)
    for (int kb = 0; kb <= bins_b; ++kb)
      joint.at(ka, kb) = ca[static_cast<std::size_t>(ka)] * cb[static_cast<std::size_t>(kb)];
  return joint;
}

/// Click statistics of a coherent input on the unequal-bin model.
inline std::vector<double> unequal_bin_click_distribution(const CoherentInput& input, const DetectorModel& model) {
  const auto p = unequal_bin_no_click_probs(input, model);
  return poisson_binomial_click_distribution(p);
}

}  // namespace clickcal
