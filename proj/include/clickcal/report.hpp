#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickcal/config.hpp"
#include "clickcal/homodyne.hpp"
#include "clickcal/pipeline.hpp"
#include "clickcal/povm.hpp"

namespace clickcal {

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string csv_num(double v) { return fmt("%.17g", v); }

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
  if (!out) throw std::runtime_error("failed while writing: " + path);
}

/// Curve label in the style Gamma_A^H for the axis polarizations.
inline std::string curve_label(const std::string& mode, double phi_deg) {
  double f = std::fmod(phi_deg, 90.0);
  if (f < 0.0) f += 90.0;
  if (std::abs(f) < 1e-9 || std::abs(f - 90.0) < 1e-9) return "Gamma_" + mode + "^H";
  if (std::abs(f - 45.0) < 1e-9) return "Gamma_" + mode + "^V";
  return "Gamma_" + mode + "(phi=" + fmt("%g", phi_deg) + " deg)";
}

inline nlohmann::ordered_json provenance(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.config_hash));
  j["config_hash"] = std::string(buf);
  if (cfg.seed)
    j["seed"] = *cfg.seed;
  else
    j["seed"] = nullptr;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json calibration_report_json(const CalibrationReport& rep) {
  nlohmann::ordered_json j;
  j["label"] = detail::curve_label(rep.mode, rep.phi_deg);
  j["mode"] = rep.mode;
  j["phi_deg"] = rep.phi_deg;
  j["bins"] = rep.bins;
  j["moment_order"] = rep.order;
  j["n_points"] = rep.curve.points.size();
  j["eta_tilde_per_nw"] = rep.eta_tilde;
  j["eta_tilde_err_per_nw"] = rep.eta_tilde_err;
  j["used_zero_intercept"] = rep.used_zero_intercept;
  j["free_intercept_fit"] = {{"slope_per_nw", rep.free_slope},
                             {"slope_err_per_nw", rep.free_slope_err},
                             {"nu_tilde", rep.nu_tilde},
                             {"nu_tilde_err", rep.nu_tilde_err},
                             {"intercept_consistent_zero", rep.intercept_consistent_zero}};
  if (rep.taylor_available) {
    j["taylor"] = {{"order", rep.taylor.order}, {"coeffs", rep.taylor.coeffs}, {"coeff_errs", rep.taylor.coeff_errs}};
  }
  if (rep.ratios_available) {
    j["nonlinearity"] = {{"quadratic_over_linear", rep.ratios.r2},
                         {"quadratic_over_linear_err", rep.ratios.r2_err},
                         {"cubic_over_linear", rep.ratios.r3},
                         {"cubic_over_linear_err", rep.ratios.r3_err}};
  }
  j["chi_per_nw"] = rep.chi_per_nw;
  j["chi_err_per_nw"] = rep.chi_err_per_nw;
  j["eta"] = rep.eta;
  j["eta_err"] = rep.eta_err;
  // Error propagation for eta is first-order in (eta_tilde, chi).
  j["eta_error_model"] = "first-order propagation over eta_tilde and chi";
  j["negative_gamma_points"] = rep.negative_gamma_points;
  j["flags"] = rep.flags;
  j["wtls"] = {{"objective", rep.wtls_objective}, {"iterations", rep.wtls_iterations}};
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : rep.curve.points) {
    points.push_back({{"power_nw", p.power_nw},
                      {"power_err_nw", p.power_err_nw},
                      {"gamma", p.gamma},
                      {"gamma_err", p.gamma_err},
                      {"negative_flagged", p.negative_flagged}});
  }
  j["points"] = std::move(points);
  return j;
}

/// Text table mirroring the calibration summary columns:
/// label, eta_tilde, sigma(eta_tilde), eta [%], sigma(eta) [%].
inline std::string calibration_report_text(const std::vector<CalibrationReport>& reports) {
  std::string out;
  out += "label                        eta_tilde(1/nW)  sigma(1/nW)      eta[%]   sigma[%]\n";
  out += "-------------------------------------------------------------------------------\n";
  char buf[160];
  for (const auto& rep : reports) {
    std::snprintf(buf, sizeof buf, "%-28s %15.6e %12.4e %9.3f %10.3f\n",
                  detail::curve_label(rep.mode, rep.phi_deg).c_str(), rep.eta_tilde, rep.eta_tilde_err, 100.0 * rep.eta,
                  100.0 * rep.eta_err);
    out += buf;
  }
  return out;
}

inline std::string response_curve_csv(const CalibrationReport& rep) {
  std::string out = "power_nw,power_err_nw,x_nw,gamma,gamma_err,gamma_fit,negative_flagged\n";
  for (const auto& p : rep.curve.points) {
    const double x = p.power_nw / static_cast<double>(rep.bins);
    const double fitted = rep.used_zero_intercept ? rep.eta_tilde * x : rep.nu_tilde + rep.free_slope * x;
    out += detail::csv_num(p.power_nw) + "," + detail::csv_num(p.power_err_nw) + "," + detail::csv_num(x) + "," +
           detail::csv_num(p.gamma) + "," + detail::csv_num(p.gamma_err) + "," + detail::csv_num(fitted) + "," +
           (p.negative_flagged ? "1" : "0") + "\n";
  }
  return out;
}

/// Write report.json, report.txt and one curve CSV per (mode, angle).
/// Identical inputs produce byte-identical files.
inline void emit_calibration_report(const std::vector<CalibrationReport>& reports, const RunConfig& cfg,
                                    const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["provenance"] = detail::provenance(cfg);
  j["curves"] = nlohmann::ordered_json::array();
  for (const auto& rep : reports) j["curves"].push_back(calibration_report_json(rep));
  detail::write_text_file(dir + "/report.json", j.dump(2) + "\n");
  detail::write_text_file(dir + "/report.txt", calibration_report_text(reports));
  for (const auto& rep : reports) {
    char name[128];
    std::snprintf(name, sizeof name, "curve_%s_phi%g.csv", rep.mode.c_str(), rep.phi_deg);
    detail::write_text_file(dir + "/" + name, response_curve_csv(rep));
  }
}

inline void emit_polarization_report(const std::vector<PolarizationSweepResult>& results, const RunConfig& cfg,
                                     const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["provenance"] = detail::provenance(cfg);
  j["modes"] = nlohmann::ordered_json::array();
  std::string text;
  char buf[200];
  for (const auto& r : results) {
    nlohmann::ordered_json m;
    m["mode"] = r.mode;
    m["eta_max_pct"] = r.fit.eta_max;
    m["eta_max_err_pct"] = r.fit.eta_max_err;
    m["eta_min_pct"] = r.fit.eta_min;
    m["eta_min_err_pct"] = r.fit.eta_min_err;
    m["phi0_deg"] = r.fit.phi0_deg;
    m["phi0_err_deg"] = r.fit.phi0_err_deg;
    m["degenerate_amplitude"] = r.fit.degenerate_amplitude;
    auto pts = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.phi_deg.size(); ++i)
      pts.push_back({{"phi_deg", r.phi_deg[i]}, {"eta_pct", r.eta_pct[i]}, {"eta_err_pct", r.eta_err_pct[i]}});
    m["points"] = std::move(pts);
    j["modes"].push_back(std::move(m));

    std::snprintf(buf, sizeof buf, "mode %s: eta_max = %.3f +- %.3f %%, eta_min = %.3f +- %.3f %%, phi0 = %.4f +- %.4f deg%s\n",
                  r.mode.c_str(), r.fit.eta_max, r.fit.eta_max_err, r.fit.eta_min, r.fit.eta_min_err, r.fit.phi0_deg,
                  r.fit.phi0_err_deg, r.fit.degenerate_amplitude ? " (degenerate amplitude)" : "");
    text += buf;
  }
  detail::write_text_file(dir + "/polarization.json", j.dump(2) + "\n");
  detail::write_text_file(dir + "/polarization.txt", text);
}

inline void emit_sense_report(const SensedMoments& sm, std::span<const SensingPoint> points, const RunConfig& cfg,
                              const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["provenance"] = detail::provenance(cfg);
  j["eta_mean"] = sm.eta_mean;
  j["eta_mean_err"] = sm.eta_mean_err;
  j["eta_sq_mean"] = sm.eta_sq_mean;
  j["eta_sq_mean_err"] = sm.eta_sq_mean_err;
  j["intercept"] = sm.intercept;
  j["intercept_err"] = sm.intercept_err;
  j["intercept_flagged"] = sm.intercept_flagged;
  j["variance"] = sm.variance;
  j["variance_err"] = sm.variance_err;
  j["negative_variance_flagged"] = sm.negative_variance_flagged;
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : points)
    pts.push_back({{"alpha_sq", p.alpha_sq}, {"moment", p.moment}, {"moment_err", p.moment_err}});
  j["points"] = std::move(pts);
  detail::write_text_file(dir + "/sense.json", j.dump(2) + "\n");

  std::string csv = "alpha_sq,moment,moment_err\n";
  for (const auto& p : points)
    csv += detail::csv_num(p.alpha_sq) + "," + detail::csv_num(p.moment) + "," + detail::csv_num(p.moment_err) + "\n";
  detail::write_text_file(dir + "/sense_points.csv", csv);
}

/// Scan CSV: columns re(alpha), im(alpha), s, value.
inline std::string scan_csv(std::span<const QuasiprobPoint> points) {
  std::string out = "re_alpha,im_alpha,s,value\n";
  for (const auto& p : points)
    out += detail::csv_num(p.alpha.real()) + "," + detail::csv_num(p.alpha.imag()) + "," + detail::csv_num(p.s) + "," +
           detail::csv_num(p.value) + "\n";
  return out;
}

/// POVM table CSV: rows k, columns n.
inline std::string povm_csv(const PovmDiagonal& povm) {
  std::string out = "k";
  for (int n = 0; n <= povm.n_max; ++n) out += ",n" + std::to_string(n);
  out += "\n";
  for (int k = 0; k <= povm.bins; ++k) {
    out += std::to_string(k);
    for (int n = 0; n <= povm.n_max; ++n) out += "," + detail::csv_num(povm.entry(k, n));
    out += "\n";
  }
  return out;
}

/// Moments CSV consumed by the sense pipeline: alpha_sq,moment,moment_err.
inline std::vector<SensingPoint> load_sensing_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sensing points: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (detail::split_csv_line(line) != std::vector<std::string>{"alpha_sq", "moment", "moment_err"})
    throw std::runtime_error(path + ": header must be alpha_sq,moment,moment_err");
  std::vector<SensingPoint> pts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    const std::string context = path + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw std::runtime_error(context + ": expected 3 fields");
    SensingPoint p;
    p.alpha_sq = detail::parse_double(fields[0], context);
    p.moment = detail::parse_double(fields[1], context);
    p.moment_err = detail::parse_double(fields[2], context);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace clickcal
