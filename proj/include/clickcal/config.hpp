#pragma once
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickcal/homodyne.hpp"
#include "clickcal/sensing.hpp"

namespace clickcal {

/// Simulated detector: bins, dark rate and a polarization-dependent scaled
/// efficiency. A flat eta_tilde_per_nw overrides the cosine model.
struct SimDetector {
  std::string label = "A";
  int bins = 8;
  double nu_tilde = 0.0;
  std::optional<double> eta_tilde_per_nw;  // flat response when set
  double eta_pct_max = 0.0;                // cosine model otherwise, in percent
  double eta_pct_min = 0.0;
  double phi0_deg = 0.0;

  /// Scaled efficiency (1/nW) at HWP angle phi.
  double eta_tilde_at(double phi_deg, double chi_per_nw) const {
    if (eta_tilde_per_nw) return *eta_tilde_per_nw;
    constexpr double kDegToRad = 0.017453292519943295;
    const double eta_pct = 0.5 * (eta_pct_max - eta_pct_min) * std::cos(4.0 * (phi_deg + phi0_deg) * kDegToRad) +
                           0.5 * (eta_pct_max + eta_pct_min);
    return chi_per_nw * eta_pct / 100.0;
  }
};

struct SimulateConfig {
  std::vector<double> powers_nw;
  double power_err_frac = 0.05;
  std::vector<double> angles_deg{0.0};
  double events = 1e5;
  bool exact = false;  // emit exact expected counts instead of sampling
};

struct CalibrateConfig {
  std::string intercept = "auto";  // auto | free | zero
  int max_order = 3;
};

struct SenseConfig {
  TransmittanceModel model = TransmittanceModel::uniform();
  double eta_det = 0.5;
  int bins = 8;
  std::vector<double> alpha_sq;
  double events = 1e6;
  bool exact = false;
  std::string input;  // optional moments CSV; bypasses simulation
};

struct PhaseScanConfig {
  ScanState state;
  double eta_det = 0.5;
  double s = 0.0;
  int bins = 8;
  ComplexGrid grid;
};

struct PovmConfig {
  int bins = 8;
  double eta = 0.5;
  double nu = 0.0;
};

struct RunConfig {
  double chi_per_nw = 0.0;
  double chi_err_per_nw = 0.0;
  int order = 1;    // moment order l used for gamma extraction
  int n_max = 100;  // Fock truncation
  std::optional<std::uint64_t> seed;
  std::vector<SimDetector> detectors;
  std::optional<SimulateConfig> simulate;
  CalibrateConfig calibrate;
  std::optional<SenseConfig> sense;
  std::optional<PhaseScanConfig> phase_scan;
  std::optional<PovmConfig> povm;
  std::string output_dir = ".";
  std::string output_format = "csv";  // dataset format emitted by simulate
  std::uint64_t config_hash = 0;      // FNV-1a of the canonical config text

  std::uint64_t require_seed() const {
    if (!seed) throw std::runtime_error("config: this operation needs an explicit \"seed\" (no wall-clock defaults)");
    return *seed;
  }
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline TransmittanceModel parse_transmittance(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "delta") return TransmittanceModel::delta(j.at("eta0").get<double>());
  if (kind == "uniform") return TransmittanceModel::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  if (kind == "truncated-log-normal")
    return TransmittanceModel::truncated_log_normal(j.at("mu").get<double>(), j.at("sigma").get<double>());
  if (kind == "beta") return TransmittanceModel::beta(j.at("alpha").get<double>(), j.at("beta").get<double>());
  if (kind == "tabulated")
    return TransmittanceModel::tabulated(j.at("nodes").get<std::vector<double>>(),
                                         j.at("densities").get<std::vector<double>>());
  throw std::runtime_error("config: unknown transmittance kind '" + kind + "'");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j, const std::string& origin) {
  RunConfig cfg;
  cfg.config_hash = detail::fnv1a64(j.dump());
  cfg.chi_per_nw = j.value("chi_per_nw", 0.0);
  cfg.chi_err_per_nw = j.value("chi_err_per_nw", 0.0);
  cfg.order = j.value("order", 1);
  cfg.n_max = j.value("n_max", 100);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw std::runtime_error(origin + ": seed must be an unsigned integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("detectors")) {
    for (const auto& d : j["detectors"]) {
      SimDetector det;
      det.label = d.value("label", std::string("A"));
      det.bins = d.value("bins", 8);
      det.nu_tilde = d.value("nu_tilde", 0.0);
      if (d.contains("eta_tilde_per_nw")) det.eta_tilde_per_nw = d["eta_tilde_per_nw"].get<double>();
      det.eta_pct_max = d.value("eta_pct_max", 0.0);
      det.eta_pct_min = d.value("eta_pct_min", 0.0);
      det.phi0_deg = d.value("phi0_deg", 0.0);
      if (det.bins < 1) throw std::runtime_error(origin + ": detector bins must be >= 1");
      cfg.detectors.push_back(std::move(det));
    }
  }
  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    SimulateConfig sim;
    if (s.contains("powers_nw")) {
      sim.powers_nw = s["powers_nw"].get<std::vector<double>>();
    } else {
      const double lo = s.at("power_min_nw").get<double>();
      const double hi = s.at("power_max_nw").get<double>();
      const int count = s.at("power_count").get<int>();
      const bool geometric = s.value("power_spacing", std::string("geometric")) == "geometric";
      if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::runtime_error(origin + ": bad simulate power grid");
      for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        sim.powers_nw.push_back(geometric ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
      }
    }
    sim.power_err_frac = s.value("power_err_frac", 0.05);
    if (s.contains("angles_deg")) sim.angles_deg = s["angles_deg"].get<std::vector<double>>();
    sim.events = s.value("events", 1e5);
    sim.exact = s.value("exact", false);
    cfg.simulate = std::move(sim);
  }
  if (j.contains("calibrate")) {
    cfg.calibrate.intercept = j["calibrate"].value("intercept", std::string("auto"));
    cfg.calibrate.max_order = j["calibrate"].value("max_order", 3);
    if (cfg.calibrate.intercept != "auto" && cfg.calibrate.intercept != "free" && cfg.calibrate.intercept != "zero")
      throw std::runtime_error(origin + ": calibrate.intercept must be auto, free or zero");
  }
  if (j.contains("sense")) {
    const auto& s = j["sense"];
    SenseConfig sense;
    if (s.contains("model")) sense.model = detail::parse_transmittance(s["model"]);
    sense.eta_det = s.value("eta_det", 0.5);
    sense.bins = s.value("bins", 8);
    if (s.contains("alpha_sq")) sense.alpha_sq = s["alpha_sq"].get<std::vector<double>>();
    sense.events = s.value("events", 1e6);
    sense.exact = s.value("exact", false);
    sense.input = s.value("input", std::string());
    cfg.sense = std::move(sense);
  }
  if (j.contains("phase_scan")) {
    const auto& p = j["phase_scan"];
    PhaseScanConfig scan;
    const auto& st = p.at("state");
    const std::string kind = st.at("kind").get<std::string>();
    if (kind == "coherent") {
      scan.state.kind = ScanState::Kind::Coherent;
      scan.state.amplitude = {st.value("re", 0.0), st.value("im", 0.0)};
    } else if (kind == "fock") {
      scan.state.kind = ScanState::Kind::Fock;
      scan.state.fock_n = st.at("n").get<int>();
    } else {
      throw std::runtime_error(origin + ": phase_scan state kind must be coherent or fock");
    }
    scan.eta_det = p.value("eta_det", 0.5);
    scan.s = p.value("s", 0.0);
    scan.bins = p.value("bins", 8);
    if (p.contains("grid")) {
      const auto& g = p["grid"];
      scan.grid.re_min = g.value("re_min", -1.0);
      scan.grid.re_max = g.value("re_max", 1.0);
      scan.grid.re_steps = g.value("re_steps", 11);
      scan.grid.im_min = g.value("im_min", -1.0);
      scan.grid.im_max = g.value("im_max", 1.0);
      scan.grid.im_steps = g.value("im_steps", 11);
    }
    cfg.phase_scan = std::move(scan);
  }
  if (j.contains("povm")) {
    const auto& p = j["povm"];
    PovmConfig povm;
    povm.bins = p.value("bins", 8);
    povm.eta = p.value("eta", 0.5);
    povm.nu = p.value("nu", 0.0);
    cfg.povm = povm;
  }
  if (j.contains("output")) {
    cfg.output_dir = j["output"].value("dir", std::string("."));
    cfg.output_format = j["output"].value("format", std::string("csv"));
  }
  if (cfg.output_format != "csv" && cfg.output_format != "json")
    throw std::runtime_error(origin + ": output.format must be csv or json");

  // Referenced input files must exist at load time.
  if (cfg.sense && !cfg.sense->input.empty() && !std::filesystem::exists(cfg.sense->input))
    throw std::runtime_error(origin + ": sense.input does not exist: " + cfg.sense->input);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  return parse_config(j, path);
}

}  // namespace clickcal
