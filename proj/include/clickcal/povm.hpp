#pragma once
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickcal/numeric.hpp"

namespace clickcal {

/// Photon-number probabilities p(0..n_max) plus the declared truncation tail.
struct PhotonDistribution {
  std::vector<double> probs;
  double tail = 0.0;

  int n_max() const { return static_cast<int>(probs.size()) - 1; }
};

/// Fock-diagonal POVM of a calibrated linear-response click detector:
/// table(k, n) = <n| Pi_k |n> for k = 0..N, n = 0..n_max. Off-diagonal Fock
/// elements vanish for a phase-insensitive response and are not stored.
struct PovmDiagonal {
  int bins = 0;
  double eta = 0.0;
  double nu = 0.0;
  int n_max = 0;
  std::vector<double> table;  // (bins+1) x (n_max+1), row-major in k

  double entry(int k, int n) const { return table[static_cast<std::size_t>(k) * (n_max + 1) + n]; }
};

/// Diagonal of Pi_k over photon number:
/// entry(n) = C(N,k) sum_{j=0}^{k} C(k,j) (-1)^j e^{-(N-k+j) nu} (1-(N-k+j) eta/N)^n.
/// The alternating sum is evaluated with compensated summation.
inline std::vector<double> povm_diagonal(int bins, int k, double eta, double nu, int n_max) {
  if (bins < 1) throw std::invalid_argument("povm_diagonal: bins must be >= 1");
  if (k < 0 || k > bins) throw std::invalid_argument("povm_diagonal: k must satisfy 0 <= k <= N");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("povm_diagonal: eta must lie in [0, 1]");
  if (!(nu >= 0.0)) throw std::invalid_argument("povm_diagonal: nu must be >= 0");
  if (n_max < 0) throw std::invalid_argument("povm_diagonal: n_max must be >= 0");

  const double cnk = binomial_coefficient(bins, k);
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  std::vector<double> base(static_cast<std::size_t>(k) + 1), dark(static_cast<std::size_t>(k) + 1),
      power(static_cast<std::size_t>(k) + 1, 1.0), sign(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j <= k; ++j) {
    const double lam = static_cast<double>(bins - k + j);
    base[static_cast<std::size_t>(j)] = 1.0 - lam * eta / static_cast<double>(bins);
    dark[static_cast<std::size_t>(j)] = std::exp(-lam * nu) * binomial_coefficient(k, j);
    sign[static_cast<std::size_t>(j)] = (j % 2 == 0) ? 1.0 : -1.0;
  }
  for (int n = 0; n <= n_max; ++n) {
    CompensatedSum acc;
    for (int j = 0; j <= k; ++j)
      acc.add(sign[static_cast<std::size_t>(j)] * dark[static_cast<std::size_t>(j)] * power[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(n)] = cnk * acc.value();
    for (int j = 0; j <= k; ++j) power[static_cast<std::size_t>(j)] *= base[static_cast<std::size_t>(j)];
  }
  return out;
}

/// Full diagonal POVM table.
inline PovmDiagonal make_povm_diagonal(int bins, double eta, double nu, int n_max) {
  PovmDiagonal povm;
  povm.bins = bins;
  povm.eta = eta;
  povm.nu = nu;
  povm.n_max = n_max;
  povm.table.reserve(static_cast<std::size_t>(bins + 1) * (n_max + 1));
  for (int k = 0; k <= bins; ++k) {
    const auto row = povm_diagonal(bins, k, eta, nu, n_max);
    povm.table.insert(povm.table.end(), row.begin(), row.end());
  }
  return povm;
}

/// max_n | sum_k entry(k, n) - 1 |; zero for an exactly complete POVM.
inline double completeness_defect(const PovmDiagonal& povm) {
  double worst = 0.0;
  for (int n = 0; n <= povm.n_max; ++n) {
    CompensatedSum acc;
    for (int k = 0; k <= povm.bins; ++k) acc.add(povm.entry(k, n));
    worst = std::max(worst, std::abs(acc.value() - 1.0));
  }
  return worst;
}

/// Click statistics of a Fock-diagonal state: c_k = sum_n p(n) entry(k, n).
/// The emitted distribution may fall short of 1 by at most the declared tail.
inline std::vector<double> click_distribution_for_photon_statistics(const PhotonDistribution& p,
                                                                    const PovmDiagonal& povm,
                                                                    double tail_tolerance = 1e-6) {
  if (p.n_max() != povm.n_max)
    throw std::invalid_argument("click_distribution_for_photon_statistics: photon distribution and POVM n_max differ");
  if (!(p.tail <= tail_tolerance))
    throw std::invalid_argument("click_distribution_for_photon_statistics: truncation tail exceeds tolerance");
  std::vector<double> c(static_cast<std::size_t>(povm.bins) + 1);
  for (int k = 0; k <= povm.bins; ++k) {
    CompensatedSum acc;
    for (int n = 0; n <= povm.n_max; ++n) acc.add(p.probs[static_cast<std::size_t>(n)] * povm.entry(k, n));
    c[static_cast<std::size_t>(k)] = acc.value();
  }
  return c;
}

/// Poisson photon statistics of a coherent state, truncated at n_max.
inline PhotonDistribution poisson_photon_distribution(double mean, int n_max) {
  PhotonDistribution p;
  p.probs = poisson_pmf(mean, n_max);
  double sum = 0.0;
  for (double q : p.probs) sum += q;
  p.tail = std::max(0.0, 1.0 - sum);
  return p;
}

/// Photon-number distribution of a displaced Fock state, |<n|D(alpha)|m>|^2.
/// Depends on alpha only through x = |alpha|^2:
///   p(n) = (min!/max!) x^{|n-m|} e^{-x} [L_min^{(|n-m|)}(x)]^2,
/// with min/max of (n, m). Uses the associated-Laguerre recurrence and
/// log-gamma prefactors to stay in range for large n.
inline PhotonDistribution displaced_fock_number_distribution(int m, double alpha_sq, int n_max) {
  if (m < 0) throw std::invalid_argument("displaced_fock_number_distribution: m must be >= 0");
  if (!(alpha_sq >= 0.0) || !std::isfinite(alpha_sq))
    throw std::invalid_argument("displaced_fock_number_distribution: |alpha|^2 must be finite and >= 0");
  if (n_max < 0) throw std::invalid_argument("displaced_fock_number_distribution: n_max must be >= 0");

  PhotonDistribution p;
  p.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (alpha_sq == 0.0) {
    if (m <= n_max)
      p.probs[static_cast<std::size_t>(m)] = 1.0;
    else
      p.tail = 1.0;
    return p;
  }
  const double x = alpha_sq;
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const int lo = std::min(n, m), hi = std::max(n, m);
    const unsigned d = static_cast<unsigned>(hi - lo);
    const double lag = std::assoc_laguerre(static_cast<unsigned>(lo), d, x);
    double v = 0.0;
    if (lag != 0.0) {
      const double lpre = log_factorial(lo) - log_factorial(hi) + d * std::log(x) - x;
      v = std::exp(lpre + 2.0 * std::log(std::abs(lag)));
    }
    p.probs[static_cast<std::size_t>(n)] = v;
    sum += v;
  }
  p.tail = std::max(0.0, 1.0 - sum);
  return p;
}

}  // namespace clickcal
