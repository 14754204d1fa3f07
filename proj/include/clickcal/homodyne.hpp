#pragma once
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "clickcal/click_statistics.hpp"
#include "clickcal/histogram.hpp"
#include "clickcal/moments.hpp"
#include "clickcal/povm.hpp"
#include "clickcal/sampling.hpp"

namespace clickcal {

/// Calibrated single-polarization response of one click detector.
struct ResponseParams {
  double eta = 1.0;
  double nu = 0.0;
  int bins = 1;

  double gamma(double mean_photons) const { return eta * mean_photons / static_cast<double>(bins) + nu; }
};

/// Mean of the nonlinear quadrature X = N (m_A - m_B), sampled from a joint
/// histogram with equal bin numbers. The error treats both modes as jointly
/// sampled: the combined per-event kernel is k_B - k_A, so the mode covariance
/// is included automatically.
inline std::pair<double, double> quadrature_mean(const JointClickHistogram& joint) {
  if (joint.bins_a != joint.bins_b) throw std::invalid_argument("quadrature_mean: modes must have equal bin numbers");
  if (!(joint.total >= 1.0)) throw std::invalid_argument("quadrature_mean: empty histogram");
  CompensatedSum mean;
  for (int ka = 0; ka <= joint.bins_a; ++ka)
    for (int kb = 0; kb <= joint.bins_b; ++kb) mean.add(joint.at(ka, kb) * static_cast<double>(kb - ka));
  const double x = mean.value() / joint.total;
  double err = 0.0;
  if (joint.total >= 2.0) {
    CompensatedSum var;
    for (int ka = 0; ka <= joint.bins_a; ++ka)
      for (int kb = 0; kb <= joint.bins_b; ++kb) {
        const double d = static_cast<double>(kb - ka) - x;
        var.add(joint.at(ka, kb) / joint.total * d * d);
      }
    err = std::sqrt(std::max(var.value(), 0.0) / (joint.total - 1.0));
  }
  return {x, err};
}

/// Balanced homodyne with click detectors: the signal meets the phase-shifted
/// local oscillator on a 50:50 splitter; mode A takes the + port,
/// a_out = (signal + lo e^{i phi}) / sqrt(2), b_out = (signal - lo e^{i phi}) / sqrt(2).
inline JointClickHistogram balanced_homodyne_simulate(std::complex<double> signal, std::complex<double> lo, double phase,
                                                      const ResponseParams& detector_a, const ResponseParams& detector_b,
                                                      std::uint64_t events, std::uint64_t seed) {
  const std::complex<double> shifted = lo * std::polar(1.0, phase);
  const std::complex<double> amp_a = (signal + shifted) / std::sqrt(2.0);
  const std::complex<double> amp_b = (signal - shifted) / std::sqrt(2.0);
  const double gamma_a = detector_a.gamma(std::norm(amp_a));
  const double gamma_b = detector_b.gamma(std::norm(amp_b));
  const auto joint = joint_coherent_click_distribution(gamma_a, detector_a.bins, gamma_b, detector_b.bins);
  return sample_events(joint, events, seed);
}

/// One point of an s-parametrized click quasiprobability scan.
struct QuasiprobPoint {
  std::complex<double> alpha;
  double s = 0.0;
  double value = 0.0;
};

/// Click quasiprobability at local-oscillator amplitude alpha:
///   P_N(alpha; s) = 2 / (pi (1-s)) sum_k [(eta (1-s) - 2) / (eta (1-s))]^k c_k.
inline QuasiprobPoint quasiprob_point(std::span<const double> clicks, double eta_det, double s,
                                      std::complex<double> alpha) {
  if (!(s < 1.0)) throw std::invalid_argument("quasiprob_point: requires s < 1");
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw std::invalid_argument("quasiprob_point: eta_det must lie in (0, 1]");
  if (clicks.empty()) throw std::invalid_argument("quasiprob_point: empty click distribution");
  double norm = 0.0;
  for (double c : clicks) norm += c;
  if (std::abs(norm - 1.0) > 1e-9) throw std::invalid_argument("quasiprob_point: click distribution must be normalized");

  const double denom = eta_det * (1.0 - s);
  const double z = (denom - 2.0) / denom;
  CompensatedSum acc;
  double zpow = 1.0;
  for (double c : clicks) {
    acc.add(c * zpow);
    zpow *= z;
  }
  QuasiprobPoint out;
  out.alpha = alpha;
  out.s = s;
  out.value = 2.0 / (3.14159265358979323846 * (1.0 - s)) * acc.value();
  return out;
}

/// Signal state of a quasiprobability scan.
struct ScanState {
  enum class Kind { Coherent, Fock };
  Kind kind = Kind::Coherent;
  std::complex<double> amplitude;  // coherent amplitude
  int fock_n = 0;                  // Fock index
};

/// Rectangular grid over complex local-oscillator amplitudes.
struct ComplexGrid {
  double re_min = -1.0, re_max = 1.0;
  int re_steps = 11;
  double im_min = -1.0, im_max = 1.0;
  int im_steps = 11;

  void validate() const {
    if (re_steps < 1 || im_steps < 1) throw std::invalid_argument("ComplexGrid: steps must be >= 1");
    if (!(re_max >= re_min) || !(im_max >= im_min)) throw std::invalid_argument("ComplexGrid: bounds out of order");
  }
  std::complex<double> at(int i, int j) const {
    const double re = re_steps == 1 ? re_min : re_min + (re_max - re_min) * i / static_cast<double>(re_steps - 1);
    const double im = im_steps == 1 ? im_min : im_min + (im_max - im_min) * j / static_cast<double>(im_steps - 1);
    return {re, im};
  }
};

/// Scan the click quasiprobability over a grid. The measured state at grid
/// point alpha is the signal displaced by -alpha; coherent signals go through
/// the closed-form binomial statistics, Fock signals through the
/// displaced-Fock photon distribution and the detector POVM.
inline std::vector<QuasiprobPoint> quasiprob_scan(const ScanState& state, const ComplexGrid& grid, double eta_det,
                                                  double s, int bins, int n_max = 100) {
  grid.validate();
  if (bins < 1) throw std::invalid_argument("quasiprob_scan: bins must be >= 1");
  std::vector<QuasiprobPoint> out;
  out.reserve(static_cast<std::size_t>(grid.re_steps) * grid.im_steps);

  PovmDiagonal povm;
  if (state.kind == ScanState::Kind::Fock) povm = make_povm_diagonal(bins, eta_det, 0.0, n_max);

  for (int i = 0; i < grid.re_steps; ++i)
    for (int j = 0; j < grid.im_steps; ++j) {
      const std::complex<double> alpha = grid.at(i, j);
      std::vector<double> clicks;
      if (state.kind == ScanState::Kind::Coherent) {
        const double delta_sq = std::norm(state.amplitude - alpha);
        clicks = coherent_click_distribution(eta_det * delta_sq / static_cast<double>(bins), bins);
      } else {
        const auto photons = displaced_fock_number_distribution(state.fock_n, std::norm(alpha), n_max);
        clicks = click_distribution_for_photon_statistics(photons, povm, 1e-6);
        // Renormalize the truncation deficit before the alternating sum.
        double sum = 0.0;
        for (double c : clicks) sum += c;
        if (sum > 0.0)
          for (double& c : clicks) c /= sum;
      }
      out.push_back(quasiprob_point(clicks, eta_det, s, alpha));
    }
  return out;
}

}  // namespace clickcal
