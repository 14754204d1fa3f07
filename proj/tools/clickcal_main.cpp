// clickcal command line: simulate click data, calibrate detector responses,
// fit polarization sweeps, export POVM tables, sense loss channels and scan
// click quasiprobabilities. Every subcommand reads one JSON config plus flag
// overrides; all randomness comes from the configured seed.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "clickcal/clickcal.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  std::optional<int> order;
  std::optional<int> n_max;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config_path, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--input", f.input, "input file (overrides config)");
  cmd->add_option("--output", f.output, "output directory (overrides config)");
  cmd->add_option("--seed", f.seed, "RNG seed (overrides config)");
  cmd->add_option("--format", f.format, "dataset format: csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--order", f.order, "moment order l used for gamma extraction");
  cmd->add_option("--nmax", f.n_max, "Fock-space truncation");
}

clickcal::RunConfig load_with_overrides(const CommonFlags& f) {
  clickcal::RunConfig cfg = clickcal::load_config(f.config_path);
  if (f.seed) cfg.seed = *f.seed;
  if (f.format) cfg.output_format = *f.format;
  if (f.order) cfg.order = *f.order;
  if (f.n_max) cfg.n_max = *f.n_max;
  if (!f.output.empty()) cfg.output_dir = f.output;
  return cfg;
}

std::string dataset_path(const clickcal::RunConfig& cfg) {
  return cfg.output_dir + "/dataset." + cfg.output_format;
}

int cmd_simulate(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  const auto ds = clickcal::simulate_dataset(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = dataset_path(cfg);
  clickcal::save_dataset(ds, path, cfg.output_format == "csv" ? clickcal::DataFormat::Csv : clickcal::DataFormat::Json);
  std::cout << "wrote " << ds.records.size() << " records to " << path << "\n";
  return 0;
}

int cmd_calibrate(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  if (f.input.empty()) throw std::runtime_error("calibrate: --input DATASET is required");
  const auto ds = clickcal::load_dataset(f.input);
  const auto reports = clickcal::run_calibration(ds, cfg);
  clickcal::emit_calibration_report(reports, cfg, cfg.output_dir);
  std::cout << clickcal::calibration_report_text(reports);
  std::cout << "wrote report.json, report.txt and " << reports.size() << " curve files to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_polarization(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  if (f.input.empty()) throw std::runtime_error("polarization: --input DATASET is required");
  const auto ds = clickcal::load_dataset(f.input);
  const auto results = clickcal::run_polarization_sweep(ds, cfg);
  clickcal::emit_polarization_report(results, cfg, cfg.output_dir);
  for (const auto& r : results)
    std::cout << "mode " << r.mode << ": eta_max " << r.fit.eta_max << "%, eta_min " << r.fit.eta_min << "%, phi0 "
              << r.fit.phi0_deg << " deg\n";
  std::cout << "wrote polarization.json and polarization.txt to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_povm(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  if (!cfg.povm) throw std::runtime_error("povm: config has no \"povm\" section");
  const auto table = clickcal::make_povm_diagonal(cfg.povm->bins, cfg.povm->eta, cfg.povm->nu, cfg.n_max);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/povm.csv";
  clickcal::detail::write_text_file(path, clickcal::povm_csv(table));
  std::cout << "wrote POVM table (" << table.bins + 1 << " x " << table.n_max + 1 << ", completeness defect "
            << clickcal::completeness_defect(table) << ") to " << path << "\n";
  return 0;
}

int cmd_sense(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  if (!cfg.sense) throw std::runtime_error("sense-atmosphere: config has no \"sense\" section");
  auto sense = *cfg.sense;
  if (!f.input.empty()) sense.input = f.input;
  std::vector<clickcal::SensingPoint> points;
  if (!sense.input.empty())
    points = clickcal::load_sensing_points_csv(sense.input);
  else
    points = clickcal::simulate_sensing_points(sense, sense.exact ? 0 : cfg.require_seed());
  const auto moments = clickcal::extract_transmittance_moments(points, sense.eta_det, sense.bins);
  clickcal::emit_sense_report(moments, points, cfg, cfg.output_dir);
  std::cout << "sensed <eta> = " << moments.eta_mean << " +- " << moments.eta_mean_err << ", <eta^2> = "
            << moments.eta_sq_mean << " +- " << moments.eta_sq_mean_err << "\n";
  if (moments.negative_variance_flagged) std::cout << "warning: variance negative beyond 3 sigma\n";
  std::cout << "wrote sense.json and sense_points.csv to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_phase_scan(const CommonFlags& f) {
  auto cfg = load_with_overrides(f);
  if (!cfg.phase_scan) throw std::runtime_error("phase-scan: config has no \"phase_scan\" section");
  const auto& p = *cfg.phase_scan;
  const auto points = clickcal::quasiprob_scan(p.state, p.grid, p.eta_det, p.s, p.bins, cfg.n_max);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/scan.csv";
  clickcal::detail::write_text_file(path, clickcal::scan_csv(points));
  std::cout << "wrote " << points.size() << " scan points to " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"click-counting detector calibration toolkit"};
  app.require_subcommand(1);

  CommonFlags f;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic click dataset");
  add_common(simulate, f, true);
  auto* calibrate = app.add_subcommand("calibrate", "extract response curves and efficiencies from a dataset");
  add_common(calibrate, f, true);
  auto* polarization = app.add_subcommand("polarization", "fit the polarization dependence of the efficiencies");
  add_common(polarization, f, true);
  auto* povm = app.add_subcommand("povm", "export the Fock-basis POVM table of a calibrated detector");
  add_common(povm, f, true);
  auto* sense = app.add_subcommand("sense-atmosphere", "extract transmittance moments of a fluctuating loss channel");
  add_common(sense, f, true);
  auto* phase = app.add_subcommand("phase-scan", "scan the click quasiprobability over phase space");
  add_common(phase, f, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(f);
    if (calibrate->parsed()) return cmd_calibrate(f);
    if (polarization->parsed()) return cmd_polarization(f);
    if (povm->parsed()) return cmd_povm(f);
    if (sense->parsed()) return cmd_sense(f);
    if (phase->parsed()) return cmd_phase_scan(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
