#pragma once
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickcal/histogram.hpp"

namespace clickcal {

/// One acquisition: a click histogram for a mode at one power and HWP angle.
struct DatasetRecord {
  std::string mode;
  double phi_deg = 0.0;
  double power_nw = 0.0;
  double power_err_nw = 0.0;
  double events = 0.0;
  std::vector<double> counts;  // k = 0..N

  int bins() const { return static_cast<int>(counts.size()) - 1; }
  ClickHistogram histogram() const { return ClickHistogram(counts); }
};

struct Dataset {
  std::vector<DatasetRecord> records;

  std::vector<std::string> modes() const {
    std::vector<std::string> out;
    for (const auto& r : records) {
      bool seen = false;
      for (const auto& m : out) seen = seen || m == r.mode;
      if (!seen) out.push_back(r.mode);
    }
    return out;
  }
};

enum class DataFormat { Csv, Json };

inline DataFormat format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "csv") return DataFormat::Csv;
  if (ext == "json") return DataFormat::Json;
  throw std::invalid_argument("cannot infer dataset format from extension: " + path);
}

namespace detail {

inline double parse_double(const std::string& field, const std::string& context) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  while (ptr < e && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  if (ec != std::errc{} || ptr != e) throw std::runtime_error(context + ": malformed number '" + field + "'");
  if (!std::isfinite(v)) throw std::runtime_error(context + ": nonfinite number");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline void validate_record(const DatasetRecord& r, const std::string& context) {
  if (r.mode.empty()) throw std::runtime_error(context + ": empty mode label");
  if (!(r.power_nw >= 0.0)) throw std::runtime_error(context + ": power must be >= 0");
  if (!(r.power_err_nw >= 0.0)) throw std::runtime_error(context + ": power error must be >= 0");
  if (r.counts.size() < 2) throw std::runtime_error(context + ": needs counts for k = 0..N with N >= 1");
  double sum = 0.0;
  for (double c : r.counts) {
    if (!(c >= 0.0)) throw std::runtime_error(context + ": negative count");
    sum += c;
  }
  if (std::abs(sum - r.events) > 1e-6 * std::max(1.0, sum))
    throw std::runtime_error(context + ": events field does not match the sum of counts");
}

}  // namespace detail

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected a header row");
  const auto header = detail::split_csv_line(line);
  const std::size_t fixed = 5;
  if (header.size() < fixed + 2 || header[0] != "mode" || header[1] != "phi_deg" || header[2] != "power_nw" ||
      header[3] != "power_err_nw" || header[4] != "events")
    throw std::runtime_error(path + ": header must be mode,phi_deg,power_nw,power_err_nw,events,c0,...,cN");
  for (std::size_t i = fixed; i < header.size(); ++i) {
    const std::string want = "c" + std::to_string(i - fixed);
    if (header[i] != want) throw std::runtime_error(path + ": count column " + std::to_string(i) + " must be named " + want);
  }
  const std::size_t n_counts = header.size() - fixed;

  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string context = path + ":" + std::to_string(line_no);
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(context + ": expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    DatasetRecord r;
    r.mode = fields[0];
    r.phi_deg = detail::parse_double(fields[1], context);
    r.power_nw = detail::parse_double(fields[2], context);
    r.power_err_nw = detail::parse_double(fields[3], context);
    r.events = detail::parse_double(fields[4], context);
    r.counts.reserve(n_counts);
    for (std::size_t i = fixed; i < fields.size(); ++i) r.counts.push_back(detail::parse_double(fields[i], context));
    detail::validate_record(r, context);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

inline Dataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  if (!j.contains("records") || !j["records"].is_array()) throw std::runtime_error(path + ": missing 'records' array");

  Dataset ds;
  std::size_t idx = 0;
  for (const auto& rec : j["records"]) {
    const std::string context = path + ": records[" + std::to_string(idx++) + "]";
    const double phi = rec.value("phi_deg", 0.0);
    const double power = rec.at("power_nw").get<double>();
    const double power_err = rec.value("power_err_nw", 0.0);
    const double events = rec.at("events").get<double>();
    if (rec.contains("joint_counts")) {
      // Joint acquisitions expand into the two single-mode marginals.
      const auto modes = rec.at("modes").get<std::vector<std::string>>();
      if (modes.size() != 2) throw std::runtime_error(context + ": joint records need exactly two mode labels");
      const auto grid = rec.at("joint_counts").get<std::vector<std::vector<double>>>();
      if (grid.empty() || grid.front().size() < 2) throw std::runtime_error(context + ": joint_counts must be a 2-D grid");
      const int na = static_cast<int>(grid.size()) - 1;
      const int nb = static_cast<int>(grid.front().size()) - 1;
      std::vector<double> flat;
      for (const auto& row : grid) {
        if (row.size() != grid.front().size()) throw std::runtime_error(context + ": ragged joint_counts grid");
        flat.insert(flat.end(), row.begin(), row.end());
      }
      JointClickHistogram joint(na, nb, std::move(flat));
      const auto ma = joint.marginal_a(), mb = joint.marginal_b();
      for (int side = 0; side < 2; ++side) {
        DatasetRecord r;
        r.mode = modes[static_cast<std::size_t>(side)];
        r.phi_deg = phi;
        r.power_nw = power;
        r.power_err_nw = power_err;
        r.events = events;
        r.counts = side == 0 ? ma.counts : mb.counts;
        detail::validate_record(r, context);
        ds.records.push_back(std::move(r));
      }
    } else {
      DatasetRecord r;
      r.mode = rec.at("mode").get<std::string>();
      r.phi_deg = phi;
      r.power_nw = power;
      r.power_err_nw = power_err;
      r.events = events;
      r.counts = rec.at("counts").get<std::vector<double>>();
      detail::validate_record(r, context);
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, DataFormat format) {
  return format == DataFormat::Csv ? load_dataset_csv(path) : load_dataset_json(path);
}

inline Dataset load_dataset(const std::string& path) { return load_dataset(path, format_from_path(path)); }

inline void save_dataset_csv(const Dataset& ds, const std::string& path) {
  std::size_t n_counts = 0;
  for (const auto& r : ds.records) {
    if (n_counts == 0) n_counts = r.counts.size();
    if (r.counts.size() != n_counts)
      throw std::runtime_error("save_dataset_csv: records with mixed bin numbers need the JSON format");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << "mode,phi_deg,power_nw,power_err_nw,events";
  for (std::size_t i = 0; i < n_counts; ++i) out << ",c" << i;
  out << "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : ds.records) {
    out << r.mode << ',' << num(r.phi_deg) << ',' << num(r.power_nw) << ',' << num(r.power_err_nw) << ',' << num(r.events);
    for (double c : r.counts) out << ',' << num(c);
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed while writing dataset: " + path);
}

inline void save_dataset_json(const Dataset& ds, const std::string& path) {
  nlohmann::ordered_json j;
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : ds.records) {
    nlohmann::ordered_json rec;
    rec["mode"] = r.mode;
    rec["phi_deg"] = r.phi_deg;
    rec["power_nw"] = r.power_nw;
    rec["power_err_nw"] = r.power_err_nw;
    rec["events"] = r.events;
    rec["counts"] = r.counts;
    j["records"].push_back(std::move(rec));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << j.dump(2) << "\n";
}

inline void save_dataset(const Dataset& ds, const std::string& path, DataFormat format) {
  if (format == DataFormat::Csv)
    save_dataset_csv(ds, path);
  else
    save_dataset_json(ds, path);
}

}  // namespace clickcal
