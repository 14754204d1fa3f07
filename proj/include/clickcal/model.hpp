#pragma once
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clickcal {

/// Mean photon numbers of a coherent input, split by polarization.
struct CoherentInput {
  double mean_photons_h = 0.0;
  double mean_photons_v = 0.0;

  double total() const { return mean_photons_h + mean_photons_v; }

  void validate() const {
    if (!(mean_photons_h >= 0.0) || !std::isfinite(mean_photons_h) || !(mean_photons_v >= 0.0) ||
        !std::isfinite(mean_photons_v))
      throw std::invalid_argument("CoherentInput: mean photon numbers must be finite and >= 0");
  }
};

/// Transmittance/efficiency of one bin of an unequally split detector.
struct BinSpec {
  double transmittance = 0.0;  // |t_i|^2
  double efficiency = 0.0;     // eta_i
};

/// A click-counting detector: N bins behind an optical splitter, each bin
/// read out by an on/off detector with linear response.
struct DetectorModel {
  int bins = 1;
  double eta_h = 1.0;
  double eta_v = 1.0;
  double dark = 0.0;             // per-bin dark-count probability nu
  std::vector<BinSpec> per_bin;  // optional; enables the unequal-bin mode

  bool has_per_bin() const { return !per_bin.empty(); }

  void validate() const {
    if (bins < 1) throw std::invalid_argument("DetectorModel: bins must be >= 1");
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(eta_h) || !in01(eta_v)) throw std::invalid_argument("DetectorModel: efficiencies must lie in [0, 1]");
    if (!(dark >= 0.0) || !std::isfinite(dark)) throw std::invalid_argument("DetectorModel: dark rate must be >= 0");
    if (!per_bin.empty()) {
      if (per_bin.size() != static_cast<std::size_t>(bins))
        throw std::invalid_argument("DetectorModel: per_bin must list exactly one entry per bin");
      double t_sum = 0.0;
      for (const auto& b : per_bin) {
        if (!in01(b.transmittance) || !in01(b.efficiency))
          throw std::invalid_argument("DetectorModel: per-bin transmittance and efficiency must lie in [0, 1]");
        t_sum += b.transmittance;
      }
      if (t_sum > 1.0 + 1e-12)
        throw std::invalid_argument("DetectorModel: per-bin transmittances must sum to at most 1");
    }
  }
};

/// Linear response Gamma = eta_H n_H / N + eta_V n_V / N + nu for the
/// equal-splitting model.
inline double linear_gamma(const CoherentInput& input, const DetectorModel& model) {
  model.validate();
  input.validate();
  const double n = static_cast<double>(model.bins);
  return model.eta_h * input.mean_photons_h / n + model.eta_v * input.mean_photons_v / n + model.dark;
}

/// Per-bin no-click probabilities p_i = exp(-(eta_i |t_i|^2 |gamma|^2 + nu))
/// for the unequal-bin mode. The input intensity is the total mean photon
/// number across both polarization channels.
inline std::vector<double> unequal_bin_no_click_probs(const CoherentInput& input, const DetectorModel& model) {
  model.validate();
  input.validate();
  if (!model.has_per_bin())
    throw std::invalid_argument("unequal_bin_no_click_probs: model has no per_bin configuration");
  const double intensity = input.total();
  std::vector<double> p;
  p.reserve(model.per_bin.size());
  for (const auto& b : model.per_bin) {
    const double gamma_i = b.efficiency * b.transmittance * intensity + model.dark;
    p.push_back(std::exp(-gamma_i));
  }
  return p;
}

}  // namespace clickcal
