#pragma once

// Report persistence: versioned JSON and plot-data CSV. Needs nlohmann_json.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "homoglab/scaling.hpp"

namespace homoglab {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

/// NaN and infinities become null.
inline nlohmann::json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v == 0.0 ? 0.0 : v;
}

inline double num_from(const nlohmann::json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

/// Full-precision decimal that reads back to the same double.
inline std::string exact_decimal(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json report_to_json(const ScalingReport& r) {
  using nlohmann::json;
  using detail::num;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = r.kind;
  j["config_hash"] = r.config_hash;
  j["samples_requested"] = r.samples_requested;
  j["samples_ok"] = r.samples_ok;
  json series = json::array();
  for (const auto& p : r.series) series.push_back({{"scale", num(p.scale)}, {"value", num(p.value)}, {"stderr", num(p.std_error)}, {"n", p.n}});
  j["series"] = std::move(series);
  j["predicted_law"] = r.predicted_law;
  j["predicted_exponent"] = num(r.predicted_exponent);
  json pred = json::array();
  for (double v : r.predicted) pred.push_back(num(v));
  j["predicted"] = std::move(pred);
  j["fit"] = {{"valid", r.fit_valid},
              {"exponent", num(r.fit.exponent)},
              {"intercept", num(r.fit.intercept)},
              {"exponent_stderr", num(r.fit.exponent_stderr)},
              {"weighted", r.fit.weighted},
              {"note", r.fit_note}};
  json ratios = json::array();
  for (double v : r.ratios) ratios.push_back(num(v));
  j["ratios"] = std::move(ratios);
  j["ratio_spread"] = num(r.ratio_spread);
  json fails = json::array();
  for (const auto& [i, m] : r.failures) fails.push_back({{"index", i}, {"message", m}});
  j["failures"] = std::move(fails);
  // Ordered pairs rather than an object so the emission order is the computation order.
  json extras = json::array();
  for (const auto& [k, v] : r.extras) extras.push_back({k, num(v)});
  j["extras"] = std::move(extras);
  return j;
}

inline ScalingReport report_from_json(const nlohmann::json& j) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kReportSchemaVersion)
    fail(ErrorKind::ParseError, "unsupported report schema_version");
  using detail::num_from;
  ScalingReport r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.samples_requested = j.at("samples_requested").get<std::size_t>();
    r.samples_ok = j.at("samples_ok").get<std::size_t>();
    for (const auto& p : j.at("series"))
      r.series.push_back({num_from(p.at("scale")), num_from(p.at("value")), num_from(p.at("stderr")), p.at("n").get<std::size_t>()});
    r.predicted_law = j.at("predicted_law").get<std::string>();
    r.predicted_exponent = num_from(j.at("predicted_exponent"));
    for (const auto& v : j.at("predicted")) r.predicted.push_back(num_from(v));
    const auto& f = j.at("fit");
    r.fit_valid = f.at("valid").get<bool>();
    r.fit = {num_from(f.at("exponent")), num_from(f.at("intercept")), num_from(f.at("exponent_stderr")), f.at("weighted").get<bool>()};
    r.fit_note = f.at("note").get<std::string>();
    for (const auto& v : j.at("ratios")) r.ratios.push_back(num_from(v));
    r.ratio_spread = num_from(j.at("ratio_spread"));
    for (const auto& e : j.at("failures")) r.failures.emplace_back(e.at("index").get<std::size_t>(), e.at("message").get<std::string>());
    for (const auto& e : j.at("extras")) r.extras.emplace_back(e.at(0).get<std::string>(), num_from(e.at(1)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("malformed report: ") + e.what());
  }
  return r;
}

/// Byte-stable text form: two-space indent, trailing newline.
inline std::string report_text(const ScalingReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IOError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::IOError, "write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IOError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ScalingReport read_report(const std::string& path) {
  try {
    return report_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::ParseError, "'" + path + "': " + e.what());
  }
}

/// Measured series with the predicted law sampled at the same scales.
/// Columns: scale,value,stderr,n,predicted.
inline std::string series_csv(const ScalingReport& r) {
  std::string s = "scale,value,stderr,n,predicted\n";
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const auto& p = r.series[i];
    const double pred = i < r.predicted.size() ? r.predicted[i] : std::numeric_limits<double>::quiet_NaN();
    s += detail::exact_decimal(p.scale) + "," + detail::exact_decimal(p.value) + "," + detail::exact_decimal(p.std_error) + "," +
         std::to_string(p.n) + "," + detail::exact_decimal(pred) + "\n";
  }
  return s;
}

/// Fitted line value = exp(intercept) scale^exponent at the series scales. Columns: scale,fit.
inline std::string fit_csv(const ScalingReport& r) {
  std::string s = "scale,fit\n";
  if (!r.fit_valid) return s;
  for (const auto& p : r.series)
    s += detail::exact_decimal(p.scale) + "," + detail::exact_decimal(std::exp(r.fit.intercept) * std::pow(p.scale, r.fit.exponent)) + "\n";
  return s;
}

/// Write <stem>_series.csv and <stem>_fit.csv; returns the paths. An empty
/// series still gets header-only files and a warning on `warn`.
inline std::vector<std::string> emit_plotdata(const ScalingReport& r, const std::string& dir, const std::string& stem,
                                              std::ostream& warn = std::cerr) {
  if (r.series.empty()) warn << "warning: report '" << r.kind << "' has an empty series; writing header-only CSV\n";
  const std::string a = dir + "/" + stem + "_series.csv", b = dir + "/" + stem + "_fit.csv";
  write_text_file(a, series_csv(r));
  write_text_file(b, fit_csv(r));
  return {a, b};
}

}  // namespace homoglab
