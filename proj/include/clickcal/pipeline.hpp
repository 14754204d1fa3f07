#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clickcal/click_statistics.hpp"
#include "clickcal/config.hpp"
#include "clickcal/dataset.hpp"
#include "clickcal/moments.hpp"
#include "clickcal/regression.hpp"
#include "clickcal/rng.hpp"
#include "clickcal/sampling.hpp"
#include "clickcal/sensing.hpp"

namespace clickcal {

/// Synthetic dataset from the configured detectors: exact expected counts or
/// seeded multinomial samples, with recorded powers jittered by the declared
/// power uncertainty in the stochastic mode.
inline Dataset simulate_dataset(const RunConfig& cfg) {
  if (!cfg.simulate) throw std::runtime_error("simulate: config has no \"simulate\" section");
  if (cfg.detectors.empty()) throw std::runtime_error("simulate: config lists no detectors");
  if (!(cfg.chi_per_nw > 0.0)) throw std::runtime_error("simulate: chi_per_nw must be > 0");
  const SimulateConfig& sim = *cfg.simulate;
  if (sim.powers_nw.size() < 2) throw std::runtime_error("simulate: needs at least two powers");
  const std::uint64_t base_seed = sim.exact ? 0 : cfg.require_seed();

  Dataset ds;
  std::uint64_t index = 0;
  for (const auto& det : cfg.detectors) {
    for (double phi : sim.angles_deg) {
      const double eta_tilde = det.eta_tilde_at(phi, cfg.chi_per_nw);
      for (double power_true : sim.powers_nw) {
        if (!(power_true > 0.0)) throw std::runtime_error("simulate: powers must be > 0");
        const double gamma = eta_tilde * power_true / static_cast<double>(det.bins) + det.nu_tilde;
        const auto dist = coherent_click_distribution(gamma, det.bins);

        DatasetRecord rec;
        rec.mode = det.label;
        rec.phi_deg = phi;
        if (sim.exact) {
          rec.power_nw = power_true;
          rec.counts.resize(dist.size());
          for (std::size_t k = 0; k < dist.size(); ++k) rec.counts[k] = dist[k] * sim.events;
        } else {
          Rng jitter(Rng::mix(base_seed, 2 * index + 1));
          rec.power_nw = power_true * (1.0 + sim.power_err_frac * jitter.normal());
          if (!(rec.power_nw > 0.0)) throw std::runtime_error("simulate: power jitter produced a non-positive power");
          const auto hist = sample_events(dist, static_cast<std::uint64_t>(sim.events), Rng::mix(base_seed, 2 * index));
          rec.counts = hist.counts;
        }
        rec.power_err_nw = sim.power_err_frac * rec.power_nw;
        rec.events = sim.events;
        ds.records.push_back(std::move(rec));
        ++index;
      }
    }
  }
  return ds;
}

namespace detail {

struct CurveKey {
  std::string mode;
  double phi_deg;
  bool operator<(const CurveKey& o) const {
    if (mode != o.mode) return mode < o.mode;
    return phi_deg < o.phi_deg;
  }
};

}  // namespace detail

/// Response curve of one (mode, polarization) group: per power, sample the
/// order-l moment, its standard error, and invert to a response value.
inline ResponseCurve build_response_curve(const std::string& mode, double phi_deg,
                                          std::vector<const DatasetRecord*> group, int order) {
  ResponseCurve curve;
  curve.mode = mode;
  curve.phi_deg = phi_deg;
  curve.bins = group.front()->bins();
  for (const DatasetRecord* rec : group) {
    if (rec->bins() != curve.bins)
      throw std::runtime_error("calibrate: mode " + mode + " mixes different bin numbers");
    const MomentEstimate m = sample_moment(rec->histogram(), order);
    const GammaEstimate g = gamma_from_moment(m);
    ResponsePoint p;
    p.power_nw = rec->power_nw;
    p.power_err_nw = rec->power_err_nw;
    p.gamma = g.gamma;
    p.gamma_err = g.gamma_err;
    p.order = order;
    p.negative_flagged = g.negative_flagged;
    curve.points.push_back(p);
  }
  curve.sort_by_power();
  return curve;
}

/// Calibrate a single response curve.
inline CalibrationReport calibrate_curve(const ResponseCurve& curve, const RunConfig& cfg) {
  if (curve.points.size() < 2)
    throw std::runtime_error("calibrate: insufficient points for mode " + curve.mode + " (needs >= 2 powers)");
  CalibrationReport rep;
  rep.mode = curve.mode;
  rep.phi_deg = curve.phi_deg;
  rep.bins = curve.bins;
  rep.order = cfg.order;
  rep.curve = curve;
  rep.chi_per_nw = cfg.chi_per_nw;
  rep.chi_err_per_nw = cfg.chi_err_per_nw;
  for (const auto& p : curve.points)
    if (p.negative_flagged) ++rep.negative_gamma_points;
  if (rep.negative_gamma_points > 0) rep.flags.push_back("negative_gamma_points");

  double gamma_scale = 0.0;
  for (const auto& p : curve.points) gamma_scale = std::max(gamma_scale, std::abs(p.gamma));

  // Free-intercept fit for the dark-count estimate.
  const PolyFit line = taylor_fit(curve, 1);
  rep.nu_tilde = line.coeffs[0];
  rep.nu_tilde_err = line.coeff_errs[0];
  rep.free_slope = line.coeffs[1];
  rep.free_slope_err = line.coeff_errs[1];
  rep.intercept_consistent_zero =
      std::abs(rep.nu_tilde) <= 3.0 * rep.nu_tilde_err + 1e-9 * std::max(gamma_scale, 1e-300);
  if (!rep.intercept_consistent_zero) rep.flags.push_back("intercept_inconsistent_with_zero");

  const bool through_origin = cfg.calibrate.intercept != "free";
  if (through_origin) {
    const LineFit wtls = wtls_line_through_origin(curve);
    rep.eta_tilde = wtls.slope;
    rep.eta_tilde_err = wtls.slope_err;
    rep.wtls_objective = wtls.objective;
    rep.wtls_iterations = wtls.iterations;
    rep.used_zero_intercept = true;
  } else {
    rep.eta_tilde = rep.free_slope;
    rep.eta_tilde_err = rep.free_slope_err;
    rep.used_zero_intercept = false;
  }

  const int max_order = std::clamp(cfg.calibrate.max_order, 1, 3);
  const int order = std::min<int>(max_order, static_cast<int>(curve.points.size()) - 1);
  if (order >= 1) {
    rep.taylor = taylor_fit(curve, order);
    rep.taylor_available = true;
    if (order >= 3 && rep.taylor.coeffs[1] != 0.0) {
      rep.ratios = nonlinearity_ratios(rep.taylor);
      rep.ratios_available = true;
    }
  }

  if (cfg.chi_per_nw > 0.0) {
    const auto [eta, err] = efficiency_from_slope(rep.eta_tilde, rep.eta_tilde_err, cfg.chi_per_nw, cfg.chi_err_per_nw);
    rep.eta = eta;
    rep.eta_err = err;
  }
  return rep;
}

/// Calibrate every (mode, polarization) group of the dataset, ordered by mode
/// label then angle.
inline std::vector<CalibrationReport> run_calibration(const Dataset& ds, const RunConfig& cfg) {
  if (ds.records.empty()) throw std::runtime_error("calibrate: empty dataset");
  std::map<detail::CurveKey, std::vector<const DatasetRecord*>> groups;
  for (const auto& rec : ds.records) groups[{rec.mode, rec.phi_deg}].push_back(&rec);

  std::vector<CalibrationReport> reports;
  reports.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    const ResponseCurve curve = build_response_curve(key.mode, key.phi_deg, group, cfg.order);
    reports.push_back(calibrate_curve(curve, cfg));
  }
  return reports;
}

/// Per-mode polarization sweep result.
struct PolarizationSweepResult {
  std::string mode;
  std::vector<double> phi_deg;
  std::vector<double> eta_pct;
  std::vector<double> eta_err_pct;
  PolarizationFit fit;
};

/// Calibrate per angle, then fit the cosine polarization model per mode.
/// Efficiencies enter the fit in percent.
inline std::vector<PolarizationSweepResult> run_polarization_sweep(const Dataset& ds, const RunConfig& cfg) {
  const auto reports = run_calibration(ds, cfg);
  std::map<std::string, PolarizationSweepResult> by_mode;
  for (const auto& rep : reports) {
    auto& out = by_mode[rep.mode];
    out.mode = rep.mode;
    out.phi_deg.push_back(rep.phi_deg);
    out.eta_pct.push_back(100.0 * rep.eta);
    out.eta_err_pct.push_back(100.0 * rep.eta_err);
  }
  std::vector<PolarizationSweepResult> results;
  for (auto& [mode, out] : by_mode) {
    if (out.phi_deg.size() < 3)
      throw std::runtime_error("polarization: mode " + mode + " has fewer than 3 angles");
    out.fit = cosine_efficiency_fit(out.phi_deg, out.eta_pct, out.eta_err_pct);
    results.push_back(std::move(out));
  }
  return results;
}

namespace detail {

/// Inverse-CDF draw of a transmittance sample. Exact for delta and uniform;
/// other kinds go through a precomputed monotone CDF table.
class TransmittanceSampler {
 public:
  TransmittanceSampler(const TransmittanceModel& model) : model_(model) {
    using Kind = TransmittanceModel::Kind;
    if (model.kind() == Kind::Delta || model.kind() == Kind::Uniform) return;
    const int n = 4096;
    grid_.resize(n + 1);
    cdf_.resize(n + 1);
    double acc = 0.0;
    double prev = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double eta = static_cast<double>(i) / n;
      const double d = eta == 0.0 ? 0.0 : model.density(eta);
      if (i > 0) acc += 0.5 * (prev + d) / n;
      prev = d;
      grid_[static_cast<std::size_t>(i)] = eta;
      cdf_[static_cast<std::size_t>(i)] = acc;
    }
    for (auto& c : cdf_) c /= acc;  // normalize the table itself
  }

  double draw(Rng& rng) const {
    using Kind = TransmittanceModel::Kind;
    if (model_.kind() == Kind::Delta) return model_.param_a();
    if (model_.kind() == Kind::Uniform)
      return model_.param_a() + (model_.param_b() - model_.param_a()) * rng.uniform();
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    if (hi == 0) return grid_.front();
    const double c0 = cdf_[hi - 1], c1 = cdf_[hi];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return grid_[hi - 1] + t * (grid_[hi] - grid_[hi - 1]);
  }

 private:
  const TransmittanceModel& model_;
  std::vector<double> grid_;
  std::vector<double> cdf_;
};

}  // namespace detail

/// Simulated sensing run: per |alpha|^2, either the exact channel-averaged
/// moment or a seeded per-event simulation (draw eta, then the click number).
inline std::vector<SensingPoint> simulate_sensing_points(const SenseConfig& sense, std::uint64_t seed) {
  if (sense.alpha_sq.size() < 3) throw std::runtime_error("sense: needs at least 3 |alpha|^2 points");
  std::vector<SensingPoint> points;
  points.reserve(sense.alpha_sq.size());
  if (sense.exact) {
    for (double x : sense.alpha_sq) {
      SensingPoint p;
      p.alpha_sq = x;
      p.moment = turbulence_moment(x, sense.eta_det, sense.bins, sense.model);
      p.moment_err = 0.0;
      points.push_back(p);
    }
    return points;
  }
  const detail::TransmittanceSampler sampler(sense.model);
  const int bins = sense.bins;
  std::uint64_t salt = 0;
  for (double x : sense.alpha_sq) {
    const double c = sense.eta_det * x / static_cast<double>(bins);
    Rng rng(Rng::mix(seed, ++salt));
    std::vector<double> counts(static_cast<std::size_t>(bins) + 1, 0.0);
    const auto n_events = static_cast<std::uint64_t>(sense.events);
    for (std::uint64_t e = 0; e < n_events; ++e) {
      const double eta = sampler.draw(rng);
      const double p_silent = std::exp(-c * eta);
      int k = 0;
      for (int b = 0; b < bins; ++b)
        if (rng.uniform() >= p_silent) ++k;
      counts[static_cast<std::size_t>(k)] += 1.0;
    }
    const ClickHistogram hist(std::move(counts));
    const MomentEstimate m = sample_moment(hist, 1);
    SensingPoint p;
    p.alpha_sq = x;
    p.moment = m.value;
    p.moment_err = m.std_error;
    points.push_back(p);
  }
  return points;
}

}  // namespace clickcal
