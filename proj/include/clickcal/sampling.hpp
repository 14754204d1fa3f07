#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickcal/click_statistics.hpp"
#include "clickcal/histogram.hpp"
#include "clickcal/rng.hpp"

namespace clickcal {

namespace detail {

inline std::vector<double> cumulative(std::span<const double> dist, const char* what) {
  double sum = 0.0;
  std::vector<double> cum(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!(dist[i] >= 0.0)) throw std::invalid_argument(std::string(what) + ": probabilities must be >= 0");
    sum += dist[i];
    cum[i] = sum;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": distribution must sum to 1 within 1e-12");
  cum.back() = 1.0;
  return cum;
}

inline std::size_t draw_index(const std::vector<double>& cum, double u) {
  return static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

}  // namespace detail

/// Multinomial event sampler. Identical (dist, events, seed) triples produce
/// identical histograms.
inline ClickHistogram sample_events(std::span<const double> dist, std::uint64_t events, std::uint64_t seed) {
  const auto cum = detail::cumulative(dist, "sample_events");
  std::vector<double> counts(dist.size(), 0.0);
  Rng rng(seed);
  for (std::uint64_t e = 0; e < events; ++e) counts[detail::draw_index(cum, rng.uniform())] += 1.0;
  return ClickHistogram(std::move(counts));
}

/// Joint-histogram variant over a (N_A+1) x (N_B+1) probability grid.
inline JointClickHistogram sample_events(const JointDistribution& dist, std::uint64_t events, std::uint64_t seed) {
  const auto cum = detail::cumulative(dist.p, "sample_events");
  std::vector<double> counts(dist.p.size(), 0.0);
  Rng rng(seed);
  for (std::uint64_t e = 0; e < events; ++e) counts[detail::draw_index(cum, rng.uniform())] += 1.0;
  return JointClickHistogram(dist.bins_a, dist.bins_b, std::move(counts));
}

}  // namespace clickcal
