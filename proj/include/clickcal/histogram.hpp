#pragma once
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace clickcal {

namespace detail {
inline void check_counts(const std::vector<double>& counts, const char* what) {
  if (counts.empty()) throw std::invalid_argument(std::string(what) + ": counts must not be empty");
  for (double c : counts)
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument(std::string(what) + ": counts must be finite and >= 0");
}
}  // namespace detail

/// Event counts over click numbers k = 0..N. Counts are integer valued when
/// they come from the sampler; synthetic noise-free pipelines may carry exact
/// fractional event weights.
struct ClickHistogram {
  std::vector<double> counts;
  double total = 0.0;

  ClickHistogram() = default;
  explicit ClickHistogram(std::vector<double> c) : counts(std::move(c)) {
    detail::check_counts(counts, "ClickHistogram");
    for (double x : counts) total += x;
  }

  int bins() const { return static_cast<int>(counts.size()) - 1; }

  /// Normalized click statistics c_k; requires at least one event.
  std::vector<double> normalized() const {
    if (!(total > 0.0)) throw std::invalid_argument("ClickHistogram: cannot normalize an empty histogram");
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) p[i] = counts[i] / total;
    return p;
  }
};

/// Joint event counts over click pairs (k_A, k_B), stored row-major in k_A.
struct JointClickHistogram {
  int bins_a = 0;
  int bins_b = 0;
  std::vector<double> counts;  // (bins_a + 1) * (bins_b + 1)
  double total = 0.0;

  JointClickHistogram() = default;
  JointClickHistogram(int na, int nb, std::vector<double> c) : bins_a(na), bins_b(nb), counts(std::move(c)) {
    if (na < 1 || nb < 1) throw std::invalid_argument("JointClickHistogram: bins must be >= 1");
    if (counts.size() != static_cast<std::size_t>(na + 1) * static_cast<std::size_t>(nb + 1))
      throw std::invalid_argument("JointClickHistogram: counts size must be (N_A+1)*(N_B+1)");
    detail::check_counts(counts, "JointClickHistogram");
    for (double x : counts) total += x;
  }

  double at(int ka, int kb) const { return counts[static_cast<std::size_t>(ka) * (bins_b + 1) + kb]; }
  double& at(int ka, int kb) { return counts[static_cast<std::size_t>(ka) * (bins_b + 1) + kb]; }

  ClickHistogram marginal_a() const {
    std::vector<double> m(static_cast<std::size_t>(bins_a) + 1, 0.0);
    for (int ka = 0; ka <= bins_a; ++ka)
      for (int kb = 0; kb <= bins_b; ++kb) m[static_cast<std::size_t>(ka)] += at(ka, kb);
    return ClickHistogram(std::move(m));
  }
  ClickHistogram marginal_b() const {
    std::vector<double> m(static_cast<std::size_t>(bins_b) + 1, 0.0);
    for (int ka = 0; ka <= bins_a; ++ka)
      for (int kb = 0; kb <= bins_b; ++kb) m[static_cast<std::size_t>(kb)] += at(ka, kb);
    return ClickHistogram(std::move(m));
  }
};

}  // namespace clickcal
