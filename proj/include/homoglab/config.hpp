#pragma once

// Experiment configuration: YAML in, validated struct out, canonical JSON for
// hashing. Needs yaml-cpp, nlohmann_json and OpenSSL (link homoglab_io).

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "homoglab/fields.hpp"
#include "homoglab/scaling.hpp"
#include "homoglab/solver.hpp"

namespace homoglab {

inline constexpr const char* kToolVersion = "0.3.0";

enum class CampaignKind { Generate, Corrector, Ahom, AvgDecay, Growth, TwoScale, AppendixA, HelmholtzProbe };
enum class EnsembleType { Gaussian, Inclusions, Constant };

struct ExperimentConfig {
  struct Grid {
    int d = 2;
    int L = 64;
    double h = 1.0;
  } grid;
  struct Ensemble {
    EnsembleType type = EnsembleType::Gaussian;
    SpectrumSpec spectrum;
    TransformSpec transform{0.2, 1.0, TransformShape::Tanh};
    double inclusion_intensity = 0.05;
    double inclusion_radius = 2.0;
    double inclusion_a_in = 0.2;
    double inclusion_a_out = 1.0;
    /// Scalar multiple of the identity for the Constant ensemble.
    double constant_value = 1.0;
  } ensemble;
  SolveOptions solver;
  struct Campaign {
    CampaignKind kind = CampaignKind::Generate;
    std::vector<double> radii;
    /// Number of sphere directions for avg-decay (first k of the fixed list).
    int directions = 8;
    std::vector<double> eps{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    int cells_per_unit = 4;
    /// Decay exponent used by the prediction laws; 0 means "derive from the ensemble".
    double beta = 0.0;
    HelmholtzProbe probe;
  } campaign;
  struct Sampling {
    std::size_t N = 8;
    std::uint64_t master_seed = 1;
  } sampling;
  std::string output_dir = "out";
};

/// Parse or validation failure; `issues` lists every problem found.
class ConfigError : public Error {
 public:
  ConfigError(ErrorKind kind, std::vector<std::string> issues) : Error(kind, join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& m : v) s += (s.empty() ? "" : "; ") + m;
    return s;
  }
  std::vector<std::string> issues_;
};

// --- names ------------------------------------------------------------------------

inline const char* to_string(CampaignKind k) {
  switch (k) {
    case CampaignKind::Generate: return "generate";
    case CampaignKind::Corrector: return "corrector";
    case CampaignKind::Ahom: return "ahom";
    case CampaignKind::AvgDecay: return "avg-decay";
    case CampaignKind::Growth: return "growth";
    case CampaignKind::TwoScale: return "two-scale";
    case CampaignKind::AppendixA: return "appendix-a";
    case CampaignKind::HelmholtzProbe: return "helmholtz-probe";
  }
  return "unknown";
}

inline const char* to_string(EnsembleType t) {
  switch (t) {
    case EnsembleType::Gaussian: return "gaussian";
    case EnsembleType::Inclusions: return "inclusions";
    case EnsembleType::Constant: return "constant";
  }
  return "unknown";
}

inline const char* to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::PowerLaw: return "power-law";
    case SpectrumKind::LorentzianCovariance: return "lorentzian";
    case SpectrumKind::WhiteNoise: return "white-noise";
  }
  return "unknown";
}

inline const char* to_string(TransformShape s) { return s == TransformShape::Clamp ? "clamp" : "tanh"; }
inline const char* to_string(ProbeKind k) { return k == ProbeKind::LemmaLEas ? "LEas" : "LEap"; }

inline const char* to_string(KrylovMethod m) {
  switch (m) {
    case KrylovMethod::Auto: return "auto";
    case KrylovMethod::CG: return "cg";
    case KrylovMethod::BiCGStab: return "bicgstab";
  }
  return "unknown";
}

namespace detail {

template <class E>
bool enum_from(const std::string& s, E& out, std::initializer_list<E> all) {
  for (E e : all)
    if (s == to_string(e)) {
      out = e;
      return true;
    }
  return false;
}

/// Walks a YAML tree, recording every problem instead of stopping at the first.
class ConfigReader {
 public:
  explicit ConfigReader(std::vector<std::string>& issues) : issues_(issues) {}

  void issue(const std::string& path, const YAML::Node& n, const std::string& msg) {
    if (n && n.Mark().line >= 0) {
      issues_.push_back(path + " (line " + std::to_string(n.Mark().line + 1) + "): " + msg);
    } else {
      issues_.push_back(path + ": " + msg);
    }
  }

  /// True if n is a map (or absent); reports keys outside `allowed`.
  bool section(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!n) return false;
    if (!n.IsMap()) {
      issue(path, n, "expected a table");
      return false;
    }
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) issue(path.empty() ? key : path + "." + key, kv.first, "unknown key");
    }
    return true;
  }

  template <class T>
  void scalar(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string p = path.empty() ? key : path + "." + key;
    if (!n.IsScalar()) {
      issue(p, n, "expected a scalar");
      return;
    }
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        const auto s = n.as<std::string>();
        if (!s.empty() && s[0] == '-') throw YAML::BadConversion(n.Mark());
      }
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      issue(p, n, std::string("cannot read '") + n.as<std::string>() + "' as " + type_name<T>());
    }
  }

  void list(const YAML::Node& parent, const char* key, const std::string& path, std::vector<double>& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string p = path + "." + key;
    if (!n.IsSequence()) {
      issue(p, n, "expected a list of numbers");
      return;
    }
    std::vector<double> v;
    for (std::size_t i = 0; i < n.size(); ++i) {
      try {
        v.push_back(n[i].as<double>());
      } catch (const YAML::Exception&) {
        issue(p + "[" + std::to_string(i) + "]", n[i], "expected a number");
      }
    }
    out = std::move(v);
  }

  template <class E>
  void choice(const YAML::Node& parent, const char* key, const std::string& path, E& out, std::initializer_list<E> all) {
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string p = path.empty() ? key : path + "." + key;
    const std::string s = n.IsScalar() ? n.as<std::string>() : std::string();
    if (!enum_from(s, out, all)) {
      std::string opts;
      for (E e : all) opts += (opts.empty() ? "" : ", ") + std::string(to_string(e));
      issue(p, n, "'" + s + "' is not one of " + opts);
    }
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) return "a non-negative integer";
    if constexpr (std::is_integral_v<T>) return "an integer";
    if constexpr (std::is_floating_point_v<T>) return "a number";
    return "a string";
  }
  std::vector<std::string>& issues_;
};

inline constexpr auto kAllKinds = {CampaignKind::Generate, CampaignKind::Corrector,  CampaignKind::Ahom,
                                   CampaignKind::AvgDecay, CampaignKind::Growth,     CampaignKind::TwoScale,
                                   CampaignKind::AppendixA, CampaignKind::HelmholtzProbe};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace detail

/// Effective decay exponent of the configured ensemble (beta, 2 for the Lorentzian, d + 1 otherwise).
inline double ensemble_beta(const ExperimentConfig& c) {
  if (c.campaign.beta > 0.0) return c.campaign.beta;
  if (c.ensemble.type == EnsembleType::Gaussian) {
    switch (c.ensemble.spectrum.kind) {
      case SpectrumKind::PowerLaw: return c.ensemble.spectrum.beta;
      case SpectrumKind::LorentzianCovariance: return 2.0;
      case SpectrumKind::WhiteNoise: break;
    }
  }
  return c.grid.d + 1.0;
}

/// Every constraint a config must satisfy; returns all violations.
inline std::vector<std::string> validation_issues(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& field, const std::string& msg) { out.push_back(field + ": " + msg); };
  const auto& g = c.grid;
  if (g.d < 1 || g.d > 3) bad("grid.d", "must be 1, 2 or 3");
  if (!detail::is_power_of_two(g.L) || g.L < 2) bad("grid.L", "must be a power of two >= 2");
  if (!(g.h > 0.0) || !std::isfinite(g.h)) bad("grid.h", "must be positive");
  const double period = g.L * g.h;
  const auto& e = c.ensemble;
  if (e.type == EnsembleType::Gaussian) {
    if (!(e.spectrum.amplitude >= 0.0) || !std::isfinite(e.spectrum.amplitude)) bad("ensemble.spectrum.amplitude", "must be finite and >= 0");
    if (e.spectrum.kind == SpectrumKind::PowerLaw && !(e.spectrum.beta > 0.0 && e.spectrum.beta < g.d))
      bad("ensemble.spectrum.beta", "must satisfy 0 < beta < d for power-law");
    if (!(e.transform.lambda > 0.0 && e.transform.lambda <= 1.0)) bad("ensemble.transform.lambda", "must lie in (0, 1]");
    if (!(e.transform.contrast >= 0.0) || !std::isfinite(e.transform.contrast)) bad("ensemble.transform.contrast", "must be finite and >= 0");
  } else if (e.type == EnsembleType::Inclusions) {
    if (!(e.inclusion_intensity >= 0.0)) bad("ensemble.inclusions.intensity", "must be >= 0");
    if (!(e.inclusion_radius >= g.h)) bad("ensemble.inclusions.radius", "must be at least one lattice spacing");
    if (!(e.transform.lambda > 0.0 && e.transform.lambda <= 1.0)) bad("ensemble.transform.lambda", "must lie in (0, 1]");
    for (auto [v, name] : {std::pair{e.inclusion_a_in, "ensemble.inclusions.a_in"}, std::pair{e.inclusion_a_out, "ensemble.inclusions.a_out"}})
      if (!(v >= e.transform.lambda && v <= 1.0)) bad(name, "must lie in [lambda, 1]");
  } else {
    if (!(e.constant_value > 0.0 && e.constant_value <= 1.0)) bad("ensemble.constant.value", "must lie in (0, 1]");
  }
  if (!(c.solver.tol > 0.0 && c.solver.tol < 1.0)) bad("solver.tol", "must lie in (0, 1)");
  if (c.solver.max_iter < 0) bad("solver.max_iter", "must be >= 0 (0 selects the default)");

  const auto& k = c.campaign;
  const std::size_t min_n = [&]() -> std::size_t {
    switch (k.kind) {
      case CampaignKind::AvgDecay: return 8;
      case CampaignKind::Growth:
      case CampaignKind::Ahom:
      case CampaignKind::TwoScale:
      case CampaignKind::AppendixA: return 2;
      default: return 1;
    }
  }();
  if (c.sampling.N < min_n) bad("sampling.N", "must be >= " + std::to_string(min_n) + " for " + to_string(k.kind));
  if (c.sampling.N > 1000000) bad("sampling.N", "must be <= 1000000");
  auto need_radii = [&](double lo, double hi, const char* what) {
    if (k.radii.empty()) bad("campaign.radii", std::string("required for ") + to_string(k.kind));
    for (std::size_t i = 0; i < k.radii.size(); ++i)
      if (!(k.radii[i] >= lo && k.radii[i] <= hi + 1e-12))
        bad("campaign.radii[" + std::to_string(i) + "]", std::string("must lie in ") + what);
  };
  switch (k.kind) {
    case CampaignKind::AvgDecay:
      need_radii(2.0, period / 8.0, "[2, L h / 8]");
      if (k.directions < 1 || k.directions > static_cast<int>(growth_directions(std::max(g.d, 1)).size()))
        bad("campaign.directions", "must lie in [1, " + std::to_string(growth_directions(std::max(g.d, 1)).size()) + "]");
      break;
    case CampaignKind::Growth: need_radii(2.0, period / 8.0, "[2, L h / 8]"); break;
    case CampaignKind::AppendixA:
      need_radii(0.0, period / 4.0, "[0, L h / 4]");
      if (e.type != EnsembleType::Gaussian || e.spectrum.kind == SpectrumKind::WhiteNoise)
        bad("ensemble", "appendix-a needs a gaussian power-law or lorentzian ensemble");
      break;
    case CampaignKind::HelmholtzProbe:
      need_radii(1e-12, period / 8.0, "(0, L h / 8]");
      if (!(k.probe.r > 0.0)) bad("campaign.probe.r", "must be positive");
      if (!(k.probe.gamma > 0.0)) bad("campaign.probe.gamma", "must be positive");
      break;
    case CampaignKind::TwoScale:
      if (k.eps.empty()) bad("campaign.eps", "required for two-scale");
      if (k.cells_per_unit < 1) bad("campaign.cells_per_unit", "must be >= 1");
      for (std::size_t i = 0; i < k.eps.size(); ++i) {
        const double q = k.cells_per_unit / k.eps[i];
        if (!(k.eps[i] > 0.0 && k.eps[i] < 1.0) || std::abs(q - std::lround(q)) > 1e-9 || !detail::is_power_of_two(static_cast<int>(std::lround(q))))
          bad("campaign.eps[" + std::to_string(i) + "]", "must lie in (0, 1) with cells_per_unit / eps a power of two");
      }
      if (e.type != EnsembleType::Gaussian) bad("ensemble.type", "two-scale needs a gaussian ensemble");
      if (g.d != 2) bad("grid.d", "two-scale runs in d = 2");
      break;
    default: break;
  }
  if (k.beta < 0.0) bad("campaign.beta", "must be >= 0 (0 derives it from the ensemble)");
  if (c.output_dir.empty()) bad("output.dir", "must not be empty");
  return out;
}

inline void validate(const ExperimentConfig& c) {
  auto issues = validation_issues(c);
  if (!issues.empty()) throw ConfigError(ErrorKind::ValidationError, std::move(issues));
}

/// Build a config from YAML text. Unknown keys, type errors and constraint
/// violations are gathered and thrown together.
inline ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(ErrorKind::ParseError, {"line " + std::to_string(e.mark.line + 1) + ", column " + std::to_string(e.mark.column + 1) + ": " + e.msg});
  }
  ExperimentConfig c;
  std::vector<std::string> issues;
  detail::ConfigReader r(issues);
  if (!root || root.IsNull()) throw ConfigError(ErrorKind::ParseError, {"empty document"});
  if (!root.IsMap()) throw ConfigError(ErrorKind::ParseError, {"top level must be a table"});
  r.section(root, "", {"grid", "ensemble", "solver", "campaign", "sampling", "output"});

  if (const auto n = root["grid"]; r.section(n, "grid", {"d", "L", "h"})) {
    r.scalar(n, "d", "grid", c.grid.d);
    r.scalar(n, "L", "grid", c.grid.L);
    r.scalar(n, "h", "grid", c.grid.h);
  }
  if (const auto n = root["ensemble"]; r.section(n, "ensemble", {"type", "spectrum", "transform", "inclusions", "constant"})) {
    r.choice(n, "type", "ensemble", c.ensemble.type, {EnsembleType::Gaussian, EnsembleType::Inclusions, EnsembleType::Constant});
    if (const auto s = n["spectrum"]; r.section(s, "ensemble.spectrum", {"kind", "beta", "amplitude"})) {
      r.choice(s, "kind", "ensemble.spectrum", c.ensemble.spectrum.kind,
               {SpectrumKind::PowerLaw, SpectrumKind::LorentzianCovariance, SpectrumKind::WhiteNoise});
      r.scalar(s, "beta", "ensemble.spectrum", c.ensemble.spectrum.beta);
      r.scalar(s, "amplitude", "ensemble.spectrum", c.ensemble.spectrum.amplitude);
    }
    if (const auto t = n["transform"]; r.section(t, "ensemble.transform", {"lambda", "contrast", "shape"})) {
      r.scalar(t, "lambda", "ensemble.transform", c.ensemble.transform.lambda);
      r.scalar(t, "contrast", "ensemble.transform", c.ensemble.transform.contrast);
      r.choice(t, "shape", "ensemble.transform", c.ensemble.transform.shape, {TransformShape::Clamp, TransformShape::Tanh});
    }
    if (const auto t = n["inclusions"]; r.section(t, "ensemble.inclusions", {"intensity", "radius", "a_in", "a_out"})) {
      r.scalar(t, "intensity", "ensemble.inclusions", c.ensemble.inclusion_intensity);
      r.scalar(t, "radius", "ensemble.inclusions", c.ensemble.inclusion_radius);
      r.scalar(t, "a_in", "ensemble.inclusions", c.ensemble.inclusion_a_in);
      r.scalar(t, "a_out", "ensemble.inclusions", c.ensemble.inclusion_a_out);
    }
    if (const auto t = n["constant"]; r.section(t, "ensemble.constant", {"value"})) r.scalar(t, "value", "ensemble.constant", c.ensemble.constant_value);
  }
  if (const auto n = root["solver"]; r.section(n, "solver", {"tol", "max_iter", "precondition", "method"})) {
    r.scalar(n, "tol", "solver", c.solver.tol);
    r.scalar(n, "max_iter", "solver", c.solver.max_iter);
    r.scalar(n, "precondition", "solver", c.solver.precondition);
    r.choice(n, "method", "solver", c.solver.method, {KrylovMethod::Auto, KrylovMethod::CG, KrylovMethod::BiCGStab});
  }
  if (const auto n = root["campaign"];
      r.section(n, "campaign", {"kind", "radii", "directions", "eps", "cells_per_unit", "beta", "probe"})) {
    r.choice(n, "kind", "campaign", c.campaign.kind, detail::kAllKinds);
    r.list(n, "radii", "campaign", c.campaign.radii);
    r.scalar(n, "directions", "campaign", c.campaign.directions);
    r.list(n, "eps", "campaign", c.campaign.eps);
    r.scalar(n, "cells_per_unit", "campaign", c.campaign.cells_per_unit);
    r.scalar(n, "beta", "campaign", c.campaign.beta);
    if (const auto p = n["probe"]; r.section(p, "campaign.probe", {"kind", "r", "gamma"})) {
      r.choice(p, "kind", "campaign.probe", c.campaign.probe.kind, {ProbeKind::LemmaLEas, ProbeKind::LemmaLEap});
      r.scalar(p, "r", "campaign.probe", c.campaign.probe.r);
      r.scalar(p, "gamma", "campaign.probe", c.campaign.probe.gamma);
    }
  }
  if (const auto n = root["sampling"]; r.section(n, "sampling", {"N", "master_seed"})) {
    r.scalar(n, "N", "sampling", c.sampling.N);
    r.scalar(n, "master_seed", "sampling", c.sampling.master_seed);
  }
  if (const auto n = root["output"]; r.section(n, "output", {"dir"})) r.scalar(n, "dir", "output", c.output_dir);

  for (auto& m : validation_issues(c)) issues.push_back(std::move(m));
  if (!issues.empty()) throw ConfigError(ErrorKind::ValidationError, std::move(issues));
  return c;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ErrorKind::IOError, {"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// --- canonical form -----------------------------------------------------------------

namespace detail {
inline double canonical_number(double v) { return v == 0.0 ? 0.0 : v; }  // folds -0
}  // namespace detail

/// Every field, defaults included, as a JSON object with sorted keys.
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
  using nlohmann::json;
  using detail::canonical_number;
  auto nums = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(canonical_number(x));
    return a;
  };
  json j;
  j["grid"] = {{"d", c.grid.d}, {"L", c.grid.L}, {"h", canonical_number(c.grid.h)}};
  const auto& e = c.ensemble;
  j["ensemble"] = {
      {"type", to_string(e.type)},
      {"spectrum", {{"kind", to_string(e.spectrum.kind)}, {"beta", canonical_number(e.spectrum.beta)}, {"amplitude", canonical_number(e.spectrum.amplitude)}}},
      {"transform", {{"lambda", canonical_number(e.transform.lambda)}, {"contrast", canonical_number(e.transform.contrast)}, {"shape", to_string(e.transform.shape)}}},
      {"inclusions",
       {{"intensity", canonical_number(e.inclusion_intensity)},
        {"radius", canonical_number(e.inclusion_radius)},
        {"a_in", canonical_number(e.inclusion_a_in)},
        {"a_out", canonical_number(e.inclusion_a_out)}}},
      {"constant", {{"value", canonical_number(e.constant_value)}}}};
  j["solver"] = {{"tol", canonical_number(c.solver.tol)},
                 {"max_iter", c.solver.max_iter},
                 {"precondition", c.solver.precondition},
                 {"method", to_string(c.solver.method)}};
  const auto& k = c.campaign;
  j["campaign"] = {{"kind", to_string(k.kind)},
                   {"radii", nums(k.radii)},
                   {"directions", k.directions},
                   {"eps", nums(k.eps)},
                   {"cells_per_unit", k.cells_per_unit},
                   {"beta", canonical_number(k.beta)},
                   {"probe", {{"kind", to_string(k.probe.kind)}, {"r", canonical_number(k.probe.r)}, {"gamma", canonical_number(k.probe.gamma)}}}};
  j["sampling"] = {{"N", c.sampling.N}, {"master_seed", c.sampling.master_seed}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) fail(ErrorKind::IOError, "SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

/// Digest of the canonical form. The output directory is excluded so the same
/// experiment written to two places hashes the same.
inline std::string config_hash(const ExperimentConfig& c) {
  auto j = canonical_json(c);
  j.erase("output");
  return sha256_hex(j.dump());
}

namespace detail {
inline void emit_yaml(YAML::Emitter& out, const nlohmann::json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (auto it = j.begin(); it != j.end(); ++it) {
      out << YAML::Key << it.key() << YAML::Value;
      emit_yaml(out, it.value());
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : j) emit_yaml(out, v);
    out << YAML::EndSeq;
  } else if (j.is_string()) {
    out << j.get<std::string>();
  } else {
    // JSON number text is the shortest round-trip form.
    out << j.dump();
  }
}
}  // namespace detail

/// Canonical YAML text; parsing it back yields the same config hash.
inline std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  detail::emit_yaml(out, canonical_json(c));
  return std::string(out.c_str()) + "\n";
}

}  // namespace homoglab
