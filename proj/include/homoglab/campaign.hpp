#pragma once

// Campaign runner: config -> module operation -> report, plot data and manifest
// on disk. Needs the homoglab_io dependencies.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <thread>

#include "homoglab/config.hpp"
#include "homoglab/corrector.hpp"
#include "homoglab/oracle.hpp"
#include "homoglab/parallel.hpp"
#include "homoglab/report.hpp"
#include "homoglab/scaling.hpp"
#include "homoglab/serialize.hpp"
#include "homoglab/twoscale.hpp"

namespace homoglab {

struct RunOptions {
  std::string out_dir;  // empty: the config's output.dir
  unsigned threads = 1;
  bool verbose = false;
  /// Field cache directory; empty: the HOMOGLAB_CACHE environment variable, if set.
  std::string cache_dir;
  std::ostream* log = &std::cerr;
};

enum class RunStatus { Ok, Partial, Failed };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Partial: return "partial";
    case RunStatus::Failed: return "failed";
  }
  return "unknown";
}

inline int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return 0;
    case RunStatus::Partial: return 2;
    case RunStatus::Failed: return 1;
  }
  return 1;
}

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string start_time;
  std::string end_time;
  unsigned threads = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::size_t samples_requested = 0;
  std::size_t samples_ok = 0;
  RunStatus status = RunStatus::Ok;
  std::vector<std::string> outputs;
};

/// More than this fraction of failed samples fails the whole campaign.
inline constexpr double kMaxFailureFraction = 0.25;

inline RunStatus classify(std::size_t requested, std::size_t failed) {
  if (failed == 0) return RunStatus::Ok;
  if (static_cast<double>(failed) > kMaxFailureFraction * static_cast<double>(requested)) return RunStatus::Failed;
  return RunStatus::Partial;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config_hash"] = m.config_hash;
  j["tool_version"] = m.tool_version;
  j["start_time"] = m.start_time;
  j["end_time"] = m.end_time;
  j["threads"] = m.threads;
  j["seeds"] = m.seeds;
  nlohmann::json f = nlohmann::json::array();
  for (const auto& [i, msg] : m.failures) f.push_back({{"index", i}, {"message", msg}});
  j["failures"] = std::move(f);
  j["samples_requested"] = m.samples_requested;
  j["samples_ok"] = m.samples_ok;
  j["status"] = to_string(m.status);
  j["exit_code"] = exit_code(m.status);
  j["outputs"] = m.outputs;
  return j;
}

namespace detail {

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Create the directory and prove it is writable before any compute starts.
inline void ensure_writable_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::IOError, "cannot create output directory '" + dir + "'");
  const std::string probe = dir + "/.homoglab_write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "x") || !out.flush()) fail(ErrorKind::IOError, "output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace detail

/// Coefficient field of sample s for the configured ensemble, seeded by derive_seed(master, s).
class EnsembleSampler {
 public:
  EnsembleSampler(const ExperimentConfig& cfg, std::string cache_dir) : cfg_(cfg), grid_(TorusGrid::make(cfg.grid.d, cfg.grid.L, cfg.grid.h)), cache_(std::move(cache_dir)) {
    if (!cache_.empty()) {
      auto j = canonical_json(cfg);
      nlohmann::json key{{"grid", j["grid"]}, {"ensemble", j["ensemble"]}, {"version", kToolVersion}};
      key_ = sha256_hex(key.dump()).substr(0, 16);
      std::error_code ec;
      std::filesystem::create_directories(cache_, ec);
    }
  }

  const TorusGrid& grid() const noexcept { return grid_; }

  std::uint64_t seed(std::uint32_t s) const { return derive_seed(cfg_.sampling.master_seed, s); }

  CoefficientField operator()(std::uint32_t s) const {
    if (cache_.empty()) return generate(s);
    char name[64];
    std::snprintf(name, sizeof name, "%s_%016llx.hglf", key_.c_str(), static_cast<unsigned long long>(seed(s)));
    const std::string path = cache_ + "/" + name;
    if (std::filesystem::exists(path)) {
      try {
        auto a = coefficient_from_record(read_record(path));
        if (a.grid() == grid_) {
          a.set_lambda(lambda());
          return a;
        }
      } catch (const Error&) {
        // Unreadable entry: regenerate and overwrite.
      }
    }
    auto a = generate(s);
    std::ostringstream tmp;
    tmp << path << ".tmp" << std::this_thread::get_id();
    try {
      write_record(tmp.str(), to_record(a));
      std::filesystem::rename(tmp.str(), path);
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(tmp.str(), ec);
    }
    return a;
  }

  double lambda() const {
    return cfg_.ensemble.type == EnsembleType::Constant ? cfg_.ensemble.constant_value : cfg_.ensemble.transform.lambda;
  }

 private:
  CoefficientField generate(std::uint32_t s) const {
    const auto& e = cfg_.ensemble;
    const int d = grid_.dim();
    switch (e.type) {
      case EnsembleType::Gaussian: return lipschitz_transform(sample_gaussian_field(e.spectrum, grid_, seed(s)), e.transform);
      case EnsembleType::Inclusions: {
        const InclusionSpec spec{e.inclusion_intensity, e.inclusion_radius, e.inclusion_a_in * Eigen::MatrixXd::Identity(d, d),
                                 e.inclusion_a_out * Eigen::MatrixXd::Identity(d, d), e.transform.lambda};
        return sample_poisson_inclusions(spec, grid_, seed(s));
      }
      case EnsembleType::Constant: {
        auto a = CoefficientField::constant(grid_, e.constant_value * Eigen::MatrixXd::Identity(d, d));
        a.set_lambda(e.constant_value);
        return a;
      }
    }
    fail(ErrorKind::InvalidSpec, "unknown ensemble type");
  }

  ExperimentConfig cfg_;
  TorusGrid grid_;
  std::string cache_;
  std::string key_;
};

struct CampaignOutput {
  ScalingReport report;
  RunManifest manifest;
};

namespace detail {

inline void write_corrector_fields(const ExtendedCorrector& c, const std::string& dir, std::uint32_t s) {
  char stem[64];
  std::snprintf(stem, sizeof stem, "%s/corrector_%04u", dir.c_str(), s);
  for (int i = 0; i < c.dim(); ++i) {
    write_record(std::string(stem) + "_phi" + std::to_string(i) + ".hglf", to_record(c.phi[static_cast<std::size_t>(i)]));
    for (int j = 0; j < c.dim(); ++j)
      for (int k = j + 1; k < c.dim(); ++k)
        write_record(std::string(stem) + "_sigma" + std::to_string(i) + std::to_string(j) + std::to_string(k) + ".hglf", to_record(c.sigma(i, j, k)));
  }
}

inline std::string ij(int i, int j) { return std::to_string(i) + std::to_string(j); }

inline ScalingReport run_generate(const ExperimentConfig& cfg, const EnsembleSampler& sampler, const RunOptions& opt, const std::string& out) {
  const std::string dir = out + "/fields";
  ensure_writable_dir(dir);
  struct Stats {
    double min_eig, max_opn, mean_trace;
    std::size_t bad;
  };
  auto outcomes = run_samples<Stats>(cfg.sampling.N, opt.threads, [&](std::size_t s) {
    const auto a = sampler(static_cast<std::uint32_t>(s));
    const auto rep = check_admissibility(a, sampler.lambda());
    char name[64];
    std::snprintf(name, sizeof name, "/sample_%04zu.hglf", s);
    write_record(dir + name, to_record(a));
    double tr = 0.0;
    for (int j = 0; j < a.dim(); ++j) tr += mean(a.entry(j, j));
    return Stats{rep.min_symmetric_eigenvalue, rep.max_operator_norm, tr / a.dim(), rep.violating_cells};
  });
  ScalingReport r;
  r.kind = "generate";
  r.samples_requested = cfg.sampling.N;
  const auto ok = collect(outcomes, r);
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0, tr = 0.0;
  std::size_t bad = 0;
  for (const auto& s : ok) {
    mn = std::min(mn, s.min_eig);
    mx = std::max(mx, s.max_opn);
    tr += s.mean_trace;
    bad += s.bad;
  }
  r.extras = {{"min_symmetric_eigenvalue", mn},
              {"max_operator_norm", mx},
              {"mean_diagonal", ok.empty() ? 0.0 : tr / static_cast<double>(ok.size())},
              {"violating_cells", static_cast<double>(bad)}};
  r.fit_note = "no series";
  return r;
}

inline ScalingReport run_corrector_or_ahom(const ExperimentConfig& cfg, const EnsembleSampler& sampler, const RunOptions& opt,
                                           const std::string& out, bool write_fields) {
  const std::string dir = out + "/fields";
  if (write_fields) ensure_writable_dir(dir);
  struct Row {
    Eigen::MatrixXd ahom;
    double residual, sigma_residual, energy;
  };
  auto outcomes = run_samples<Row>(cfg.sampling.N, opt.threads, [&](std::size_t s) {
    const auto a = sampler(static_cast<std::uint32_t>(s));
    const auto c = compute_corrector(a, cfg.solver);
    if (write_fields) write_corrector_fields(c, dir, static_cast<std::uint32_t>(s));
    double res = 0.0, sres = 0.0, en = 0.0;
    for (int i = 0; i < c.dim(); ++i) {
      res = std::max(res, c.solver_residuals[static_cast<std::size_t>(i)]);
      sres = std::max(sres, c.sigma_residuals[static_cast<std::size_t>(i)]);
      const auto& gp = c.grad_phi[static_cast<std::size_t>(i)];
      en = std::max(en, dot(gp, gp) / static_cast<double>(a.grid().size()));
    }
    return Row{c.ahom_sample, res, sres, en};
  });
  ScalingReport r;
  r.kind = write_fields ? "corrector" : "ahom";
  r.samples_requested = cfg.sampling.N;
  const auto ok = collect(outcomes, r);
  const int d = cfg.grid.d;
  if (write_fields) {
    for (std::size_t s = 0, o = 0; s < outcomes.size(); ++s) {
      if (!outcomes[s].value) continue;
      const auto& row = ok[o++];
      const std::string p = "s" + std::to_string(s) + "_";
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r.extras.emplace_back(p + "ahom_" + ij(i, j), row.ahom(i, j));
      r.extras.emplace_back(p + "solver_residual", row.residual);
      r.extras.emplace_back(p + "sigma_residual", row.sigma_residual);
      r.extras.emplace_back(p + "max_energy", row.energy);
    }
  }
  if (ok.size() >= 2) {
    std::vector<Eigen::MatrixXd> m;
    for (const auto& row : ok) m.push_back(row.ahom);
    const auto est = summarize_ahom(std::move(m));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        r.extras.emplace_back("ahom_mean_" + ij(i, j), est.mean(i, j));
        r.extras.emplace_back("ahom_stderr_" + ij(i, j), est.std_error(i, j));
      }
  } else if (!ok.empty()) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) r.extras.emplace_back("ahom_mean_" + ij(i, j), ok[0].ahom(i, j));
  }
  r.fit_note = "no series";
  return r;
}

inline ScalingReport run_appendix_a(const ExperimentConfig& cfg, const std::string& out, std::vector<std::string>& outputs) {
  const TorusGrid g = TorusGrid::make(cfg.grid.d, cfg.grid.L, cfg.grid.h);
  const auto& spec = cfg.ensemble.spectrum;
  const auto exact = linearized_variance_exact(spec, g, cfg.campaign.radii);
  const auto mc = linearized_variance_mc(spec, g, cfg.campaign.radii, cfg.sampling.N, cfg.sampling.master_seed);
  ScalingReport r;
  r.kind = "appendix-a";
  r.samples_requested = r.samples_ok = cfg.sampling.N;
  r.predicted_law = "exact linearized variance";
  const double b = effective_beta(spec, g.dim());
  if (mc.regime == VarianceRegime::SubCritical) r.predicted_exponent = 2.0 - b;
  for (std::size_t i = 0; i < exact.radii.size(); ++i) {
    r.series.push_back({exact.radii[i], mc.values[i], mc.std_errors[i], mc.samples});
    r.predicted.push_back(exact.values[i]);
  }
  r.extras.emplace_back("regime_code", static_cast<double>(static_cast<int>(exact.regime)));
  attach_fit(r);
  attach_ratios(r);
  std::string csv = "radius,exact,mc,mc_stderr\n";
  for (std::size_t i = 0; i < exact.radii.size(); ++i)
    csv += detail::exact_decimal(exact.radii[i]) + "," + detail::exact_decimal(exact.values[i]) + "," + detail::exact_decimal(mc.values[i]) + "," +
           detail::exact_decimal(mc.std_errors[i]) + "\n";
  write_text_file(out + "/appendix_a_curves.csv", csv);
  outputs.push_back(out + "/appendix_a_curves.csv");
  return r;
}

inline ScalingReport run_two_scale_campaign(const ExperimentConfig& cfg, const RunOptions& opt, const std::string& out,
                                            std::vector<std::string>& outputs, std::vector<std::uint64_t>& seeds) {
  TwoScaleCampaign tc;
  tc.d = cfg.grid.d;
  tc.eps = cfg.campaign.eps;
  tc.cells_per_unit = cfg.campaign.cells_per_unit;
  tc.samples = cfg.sampling.N;
  tc.spectrum = cfg.ensemble.spectrum;
  tc.transform = cfg.ensemble.transform;
  tc.seed = cfg.sampling.master_seed;
  tc.threads = opt.threads;
  tc.options.solve = cfg.solver;
  tc.options.beta = ensemble_beta(cfg);
  for (std::size_t e = 0; e < tc.eps.size(); ++e)
    for (std::uint32_t s = 0; s < tc.samples; ++s) seeds.push_back(derive_seed(derive_seed(tc.seed, static_cast<std::uint32_t>(e)), s));
  auto res = run_two_scale(tc);
  std::string csv = "eps,sample_slot,err_h1,err_normalized,g_term,corrector_term,consistency\n";
  for (std::size_t e = 0; e < res.rows.size(); ++e)
    for (std::size_t s = 0; s < res.rows[e].size(); ++s) {
      const auto& r = res.rows[e][s];
      csv += detail::exact_decimal(r.eps) + "," + std::to_string(s) + "," + detail::exact_decimal(r.err_h1) + "," + detail::exact_decimal(r.err_normalized) +
             "," + detail::exact_decimal(r.g_term) + "," + detail::exact_decimal(r.corrector_term) + "," + detail::exact_decimal(r.consistency) + "\n";
    }
  write_text_file(out + "/two_scale_rows.csv", csv);
  outputs.push_back(out + "/two_scale_rows.csv");
  return std::move(res.report);
}

inline ScalingReport run_probe(const ExperimentConfig& cfg, const EnsembleSampler& sampler) {
  const auto a = sampler(0);
  auto sol = helmholtz_decay_probe(a, cfg.campaign.probe, cfg.campaign.radii, cfg.solver);
  if (cfg.campaign.probe.kind == ProbeKind::LemmaLEas) {
    for (const auto& p : las_axis_profile(sol.grad_v, cfg.campaign.probe.r, cfg.campaign.radii)) {
      const std::string tag = detail::exact_decimal(p.rho);
      sol.report.extras.emplace_back("axis_profile_measured_rho" + tag, p.measured);
      sol.report.extras.emplace_back("axis_profile_exact_rho" + tag, p.exact);
    }
  }
  return std::move(sol.report);
}

}  // namespace detail

/// Run the configured campaign and write report.json, <kind>_series.csv,
/// <kind>_fit.csv, config.yaml and manifest.json into the output directory.
/// Report bytes depend only on the config and tool version.
inline CampaignOutput run_campaign(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  validate(cfg);
  const std::string out = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
  detail::ensure_writable_dir(out);
  std::string cache = opt.cache_dir;
  if (cache.empty())
    if (const char* env = std::getenv("HOMOGLAB_CACHE")) cache = env;

  CampaignOutput res;
  RunManifest& m = res.manifest;
  m.start_time = detail::utc_now();
  m.config_hash = config_hash(cfg);
  m.threads = std::max(1u, opt.threads);
  RunOptions o = opt;
  o.threads = m.threads;
  auto& log = *opt.log;
  if (opt.verbose) log << "homoglab " << kToolVersion << ": " << to_string(cfg.campaign.kind) << " config " << m.config_hash.substr(0, 12) << " -> " << out << "\n";

  const EnsembleSampler sampler(cfg, cache);
  if (cfg.campaign.kind != CampaignKind::TwoScale)
    for (std::uint32_t s = 0; s < cfg.sampling.N; ++s) m.seeds.push_back(sampler.seed(s));

  ScalingReport& r = res.report;
  const auto& k = cfg.campaign;
  CampaignSetup setup;
  setup.grid = sampler.grid();
  setup.samples = cfg.sampling.N;
  setup.threads = o.threads;
  setup.solve = cfg.solver;
  setup.sampler = [&sampler](std::uint32_t s) { return sampler(s); };
  setup.beta = ensemble_beta(cfg);
  setup.bootstrap_seed = derive_seed(cfg.sampling.master_seed, 0xB0075u);
  switch (k.kind) {
    case CampaignKind::Generate: r = detail::run_generate(cfg, sampler, o, out); break;
    case CampaignKind::Corrector: r = detail::run_corrector_or_ahom(cfg, sampler, o, out, true); break;
    case CampaignKind::Ahom: r = detail::run_corrector_or_ahom(cfg, sampler, o, out, false); break;
    case CampaignKind::AvgDecay: {
      auto dirs = growth_directions(cfg.grid.d);
      dirs.resize(static_cast<std::size_t>(k.directions));
      r = measure_average_decay(setup, k.radii, dirs);
      break;
    }
    case CampaignKind::Growth: r = measure_corrector_growth(setup, k.radii); break;
    case CampaignKind::TwoScale: r = detail::run_two_scale_campaign(cfg, o, out, m.outputs, m.seeds); break;
    case CampaignKind::AppendixA: r = detail::run_appendix_a(cfg, out, m.outputs); break;
    case CampaignKind::HelmholtzProbe: r = detail::run_probe(cfg, sampler); break;
  }
  r.config_hash = m.config_hash;

  write_text_file(out + "/report.json", report_text(r));
  m.outputs.push_back(out + "/report.json");
  for (auto& p : emit_plotdata(r, out, r.kind, log)) m.outputs.push_back(std::move(p));
  write_text_file(out + "/config.yaml", serialize_config(cfg));
  m.outputs.push_back(out + "/config.yaml");

  m.failures = r.failures;
  m.samples_requested = r.samples_requested;
  m.samples_ok = r.samples_ok;
  m.status = classify(r.samples_requested, r.failures.size());
  // Two-scale counts jobs (eps x samples) in its failure list.
  if (k.kind == CampaignKind::TwoScale) m.status = classify(k.eps.size() * cfg.sampling.N, r.failures.size());
  m.end_time = detail::utc_now();
  write_text_file(out + "/manifest.json", manifest_to_json(m).dump(2) + "\n");
  if (opt.verbose) {
    log << "status " << to_string(m.status) << ", " << r.samples_ok << "/" << r.samples_requested << " samples ok\n";
    for (const auto& [i, msg] : r.failures) log << "  sample " << i << " failed: " << msg << "\n";
  }
  return res;
}

}  // namespace homoglab
