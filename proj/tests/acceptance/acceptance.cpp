// Acceptance run: one PASS/FAIL line per criterion, then a summary line.
//
//   acceptance [N ...]     run only the listed criteria
//
// Exit status is 0 only when every selected criterion passes.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "homoglab/campaign.hpp"
#include "homoglab/corrector.hpp"
#include "homoglab/oracle.hpp"
#include "homoglab/scaling.hpp"
#include "homoglab/twoscale.hpp"

using namespace homoglab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

std::string work_dir() {
  static const std::string dir = [] {
    const auto d = fs::temp_directory_path() / ("homoglab_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d.string();
  }();
  return dir;
}

ScalarField random_scalar(const TorusGrid& g, PhiloxStream& rng) {
  ScalarField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.normal();
  return u;
}

VectorField random_vector(const TorusGrid& g, PhiloxStream& rng) {
  VectorField F(g);
  for (int j = 0; j < g.dim(); ++j) F[j] = random_scalar(g, rng);
  return F;
}

/// Symmetric matrices Q diag(e) Q^T with eigenvalues e uniform in [lambda, 1].
CoefficientField random_symmetric_field(const TorusGrid& g, double lambda, PhiloxStream& rng) {
  const int d = g.dim();
  CoefficientField a(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    Eigen::MatrixXd m(d, d);
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) m(j, l) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd e(d);
    for (int j = 0; j < d; ++j) e(j) = lambda + (1.0 - lambda) * rng.uniform();
    a.set_matrix(c, Q * e.asDiagonal() * Q.transpose());
  }
  a.set_lambda(lambda);
  return a;
}

ExperimentConfig base_config(CampaignKind kind, int L, std::size_t N) {
  ExperimentConfig c;
  c.grid = {2, L, 1.0};
  c.campaign.kind = kind;
  c.sampling.N = N;
  return c;
}

CampaignOutput run_in(const ExperimentConfig& cfg, const std::string& name, unsigned threads) {
  RunOptions o;
  o.out_dir = work_dir() + "/" + name;
  o.threads = threads;
  static std::ostringstream quiet;
  o.log = &quiet;
  return run_campaign(cfg, o);
}

std::string report_file(const std::string& name) { return read_text_file(work_dir() + "/" + name + "/report.json"); }

// 1 ---------------------------------------------------------------------------------------
Outcome adjointness() {
  double worst = 0.0;
  for (int d : {2, 3}) {
    const auto g = TorusGrid::make(d, d == 2 ? 32 : 16);
    PhiloxStream rng(101 + d, 0, Purpose::Test);
    for (int t = 0; t < 100; ++t) {
      const auto u = random_scalar(g, rng);
      const auto F = random_vector(g, rng);
      const double lhs = dot(discrete_gradient(u), F), rhs = -dot(u, discrete_divergence(F));
      worst = std::max(worst, std::abs(lhs - rhs) / (norm(discrete_gradient(u)) * norm(F)));
    }
  }
  return {worst <= 1e-12, fmt("max relative defect %.2e over 200 pairs", worst)};
}

// 2 ---------------------------------------------------------------------------------------
Outcome dense_equivalence() {
  double worst = 0.0;
  int pairs = 0;
  for (int d : {2, 3}) {
    const auto g = TorusGrid::make(d, d == 2 ? 8 : 4);
    for (double lambda : {0.1, 0.5}) {
      PhiloxStream rng(200 + d, lambda < 0.3 ? 1 : 2, Purpose::Test);
      for (int t = 0; t < 50; ++t, ++pairs) {
        const auto a = random_symmetric_field(g, lambda, rng);
        const auto G = random_vector(g, rng);
        const auto it = solve_divform(a, G, SolveOptions{1e-12});
        const auto ref = dense_solve_reference(a, G);
        worst = std::max(worst, norm(it.u - ref) / norm(ref));
      }
    }
  }
  return {worst <= 1e-8, fmt("max relative difference %.2e over %d pairs", worst, pairs)};
}

// 3 ---------------------------------------------------------------------------------------
Outcome constant_coefficient() {
  double grad = 0.0, sigma = 0.0, ahom = 0.0;
  for (int d : {2, 3}) {
    const auto g = TorusGrid::make(d, d == 2 ? 64 : 16);
    for (double c : {0.3, 1.0}) {
      const Eigen::MatrixXd m = c * Eigen::MatrixXd::Identity(d, d);
      const auto cor = compute_corrector(CoefficientField::constant(g, m));
      for (int i = 0; i < d; ++i) {
        grad = std::max(grad, max_abs(cor.grad_phi[i]));
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) sigma = std::max(sigma, max_abs(cor.sigma(i, j, k)));
      }
      ahom = std::max(ahom, (cor.ahom_sample - m).cwiseAbs().maxCoeff());
    }
  }
  return {grad <= 1e-10 && sigma == 0.0 && ahom <= 1e-10, fmt("max|grad phi| %.1e, max|sigma| %.1e, |ahom - c Id| %.1e", grad, sigma, ahom)};
}

// 4 ---------------------------------------------------------------------------------------
Outcome laminate() {
  const int L = 128;
  const auto g = TorusGrid::make(2, L);
  ScalarField alpha(g);
  for (std::size_t i = 0; i < g.size(); ++i) alpha[i] = g.coords(i)[0] < L / 2 ? 0.2 : 1.0;
  const auto c = compute_corrector(CoefficientField::isotropic(alpha), SolveOptions{1e-11});
  Eigen::MatrixXd expect(2, 2);
  expect << 2.0 * 0.2 / 1.2, 0.0, 0.0, 0.6;
  const double err = (c.ahom_sample - expect).cwiseAbs().maxCoeff();
  return {err <= 1e-6, fmt("ahom = [[%.9f, %.1e], [%.1e, %.9f]], max error %.1e", c.ahom_sample(0, 0), c.ahom_sample(0, 1), c.ahom_sample(1, 0),
                           c.ahom_sample(1, 1), err)};
}

// 5 ---------------------------------------------------------------------------------------
Outcome corrector_invariants() {
  const auto g = TorusGrid::make(2, 128);
  const SolveOptions opts{1e-9};
  const double lambda = 0.2;
  double energy = 0.0, sig_res = 0.0, mean_q = 0.0, sandwich = -1.0;
  bool skew = true;
  for (std::uint32_t s = 0; s < 16; ++s) {
    const auto w = sample_gaussian_field({SpectrumKind::PowerLaw, 1.0, 1.0}, g, derive_seed(5, s));
    const auto a = lipschitz_transform(w, {lambda, 1.0, TransformShape::Tanh});
    const auto c = compute_corrector(a, opts);
    double harm = 0.0, arith = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      harm += 1.0 / a(x, 0, 0);
      arith += a(x, 0, 0);
    }
    harm = static_cast<double>(g.size()) / harm;
    arith /= static_cast<double>(g.size());
    for (int i = 0; i < 2; ++i) {
      energy = std::max(energy, dot(c.grad_phi[i], c.grad_phi[i]) / static_cast<double>(g.size()));
      sig_res = std::max(sig_res, c.sigma_residuals[i]);
      for (int j = 0; j < 2; ++j) mean_q = std::max(mean_q, std::abs(mean(c.q[i][j])));
      const auto s01 = c.sigma(i, 0, 1), s10 = c.sigma(i, 1, 0);
      for (std::size_t x = 0; x < g.size(); ++x) skew = skew && s01[x] == -s10[x];
      skew = skew && max_abs(c.sigma(i, 0, 0)) == 0.0 && max_abs(c.sigma(i, 1, 1)) == 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c.ahom_sample + c.ahom_sample.transpose()));
    // Positive margin means harm <= eig_min and eig_max <= arith.
    const double margin = std::min(es.eigenvalues()(0) - harm, arith - es.eigenvalues()(1));
    sandwich = s == 0 ? margin : std::min(sandwich, margin);
  }
  const bool pass = energy <= 25.0 && skew && sig_res <= 10 * opts.tol && mean_q <= 1e-14 && sandwich >= -1e-8;
  return {pass, fmt("max energy %.3f, skew %s, max sigma residual %.1e, max|mean q| %.1e, sandwich margin %.2e", energy, skew ? "exact" : "broken",
                    sig_res, mean_q, sandwich)};
}

// 6 ---------------------------------------------------------------------------------------
Outcome subcritical_exponent() {
  const auto curve = linearized_variance_exact({SpectrumKind::PowerLaw, 1.0, 1.0}, TorusGrid::make(2, 4096), {16, 32, 64, 128, 256});
  std::vector<SeriesPoint> s;
  for (std::size_t i = 0; i < curve.radii.size(); ++i) s.push_back({curve.radii[i], curve.values[i], 0.0, 1});
  const auto fit = fit_power_law(s);
  return {std::abs(fit.exponent - 1.0) <= 0.1, fmt("slope %.4f (expected 1.0 +- 0.1)", fit.exponent)};
}

// 7 ---------------------------------------------------------------------------------------
Outcome critical_log_ratios() {
  const std::vector<double> radii{8, 16, 32, 64};
  const SpectrumSpec lor{SpectrumKind::LorentzianCovariance, 2.0, 1.0};
  const auto c2 = linearized_variance_exact(lor, TorusGrid::make(2, 4096), radii);
  const auto c3 = linearized_variance_exact(lor, TorusGrid::make(3, 256), radii);
  std::vector<double> r2, r3;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double l = std::log(radii[i]);
    r2.push_back(c2.values[i] / (l * l));
    r3.push_back(c3.values[i] / l);
  }
  const double s2 = ratio_spread(r2), s3 = ratio_spread(r3);
  return {s2 <= 0.2 && s3 <= 0.2, fmt("d=2 value/log^2 R in [%.3f, %.3f] spread %.3f; d=3 value/log R in [%.3f, %.3f] spread %.3f",
                                      *std::min_element(r2.begin(), r2.end()), *std::max_element(r2.begin(), r2.end()), s2,
                                      *std::min_element(r3.begin(), r3.end()), *std::max_element(r3.begin(), r3.end()), s3)};
}

// 8 ---------------------------------------------------------------------------------------
Outcome oracle_cross_validation() {
  const SpectrumSpec spec{SpectrumKind::PowerLaw, 1.0, 1.0};
  const auto g = TorusGrid::make(2, 256);
  const std::vector<double> radii{4, 8, 16, 32, 64};
  const auto ex = linearized_variance_exact(spec, g, radii);
  const auto mc = linearized_variance_mc(spec, g, radii, 200, 77);
  double worst = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) worst = std::max(worst, std::abs(mc.values[i] - ex.values[i]) / mc.std_errors[i]);
  return {worst <= 3.0, fmt("max |mc - exact| / stderr = %.2f over %zu radii", worst, radii.size())};
}

// 9 ---------------------------------------------------------------------------------------
Outcome average_decay() {
  auto cfg = base_config(CampaignKind::AvgDecay, 512, 64);
  cfg.ensemble.transform = {0.2, 0.1, TransformShape::Tanh};
  cfg.solver.tol = 1e-8;
  cfg.campaign.radii = {8, 16, 32, 64};
  const auto pl = run_in(cfg, "avg_decay", 1).report;
  cfg.ensemble.spectrum = {SpectrumKind::WhiteNoise, 1.0, 1.0};
  const auto wn = run_in(cfg, "avg_decay_white", 1).report;
  const bool pass = pl.fit_valid && wn.fit_valid && std::abs(pl.fit.exponent + 0.5) <= 0.2 && std::abs(wn.fit.exponent + 1.0) <= 0.2;
  return {pass, fmt("beta=1 slope %.3f +- %.3f (expected -0.5 +- 0.2); white noise slope %.3f +- %.3f (expected -1.0 +- 0.2)", pl.fit.exponent,
                    pl.fit.exponent_stderr, wn.fit.exponent, wn.fit.exponent_stderr)};
}

// 10 --------------------------------------------------------------------------------------
ExperimentConfig growth_config() {
  auto cfg = base_config(CampaignKind::Growth, 512, 32);
  cfg.solver.tol = 1e-8;
  cfg.campaign.radii = {8, 16, 32, 64};
  return cfg;
}

Outcome growth() {
  auto cfg = growth_config();
  const auto pl = run_in(cfg, "growth", 1).report;
  cfg.ensemble.spectrum = {SpectrumKind::LorentzianCovariance, 2.0, 1.0};
  const auto lz = run_in(cfg, "growth_lorentzian", 1).report;
  std::vector<double> ratios;
  for (const auto& p : lz.series) ratios.push_back(p.value / std::log(p.scale + 2.0));
  const double spread = ratio_spread(ratios);
  const bool pass = pl.fit_valid && std::abs(pl.fit.exponent - 0.5) <= 0.15 && lz.series.size() == 4 && spread <= 0.25;
  return {pass, fmt("beta=1 exponent %.3f +- %.3f (expected 0.5 +- 0.15); Lorentzian statistic/log(r+2) in [%.3f, %.3f] spread %.3f", pl.fit.exponent,
                    pl.fit.exponent_stderr, *std::min_element(ratios.begin(), ratios.end()), *std::max_element(ratios.begin(), ratios.end()),
                    spread)};
}

// 11 --------------------------------------------------------------------------------------
Outcome two_scale() {
  auto cfg = base_config(CampaignKind::TwoScale, 64, 8);
  cfg.ensemble.spectrum = {SpectrumKind::WhiteNoise, 1.0, 1.0};
  cfg.ensemble.transform = {0.2, 2.0, TransformShape::Tanh};
  cfg.solver.tol = 1e-9;
  const auto rep = run_in(cfg, "two_scale", 1).report;
  bool decreasing = rep.series.size() == cfg.campaign.eps.size();
  for (std::size_t i = 1; i < rep.series.size(); ++i) decreasing = decreasing && rep.series[i - 1].value < rep.series[i].value;
  const bool slope_ok = rep.fit_valid && rep.fit.exponent >= 0.8 && rep.fit.exponent <= 1.05;
  double control = 0.0;
  for (const auto& [k, v] : rep.extras)
    if (k.rfind("control_err_h1", 0) == 0) control = std::max(control, v);
  const bool control_ok = control <= 10 * cfg.solver.tol;
  return {decreasing && slope_ok && control_ok,
          fmt("err strictly decreasing: %s; slope %.3f +- %.3f (window [0.8, 1.05], law %.3f); constant-a control max err %.3e (limit %.0e)",
              decreasing ? "yes" : "no", rep.fit.exponent, rep.fit.exponent_stderr, rep.predicted_exponent, control, 10 * cfg.solver.tol)};
}

// 12 --------------------------------------------------------------------------------------
Outcome helmholtz() {
  const auto g = TorusGrid::make(2, 1024);
  const auto a = CoefficientField::constant(g, Eigen::MatrixXd::Identity(2, 2));
  const auto ap = helmholtz_decay_probe(a, {ProbeKind::LemmaLEap, 4.0, 1.0}, {16, 32, 64}).report;
  const double r = 2.0;
  const auto as = helmholtz_decay_probe(a, {ProbeKind::LemmaLEas, r, 0.0}, {16, 32, 64});
  double worst = 0.0;
  for (const auto& p : las_axis_profile(as.grad_v, r, {16, 32})) worst = std::max(worst, std::abs(p.measured - p.exact) / std::abs(p.exact));
  const bool pass = ap.fit_valid && std::abs(ap.fit.exponent + 2.0) <= 0.2 && worst <= 0.1;
  return {pass, fmt("LEap decay slope %.3f (expected -2 +- 0.2); LEas profile max relative error %.3f at rho 16, 32", ap.fit.exponent, worst)};
}

// 13 --------------------------------------------------------------------------------------
Outcome reproducibility() {
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  {
    auto c = base_config(CampaignKind::Generate, 64, 4);
    runs.emplace_back("generate", c);
    c.campaign.kind = CampaignKind::Corrector;
    runs.emplace_back("corrector", c);
    c.campaign.kind = CampaignKind::Ahom;
    c.ensemble.type = EnsembleType::Inclusions;
    runs.emplace_back("ahom", c);
  }
  {
    auto c = base_config(CampaignKind::AvgDecay, 128, 8);
    c.solver.tol = 1e-8;
    c.campaign.radii = {2, 4, 8, 16};
    runs.emplace_back("avg-decay", c);
  }
  runs.emplace_back("growth", growth_config());
  {
    auto c = base_config(CampaignKind::TwoScale, 64, 4);
    c.ensemble.spectrum = {SpectrumKind::WhiteNoise, 1.0, 1.0};
    c.campaign.eps = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    runs.emplace_back("two-scale", c);
  }
  {
    auto c = base_config(CampaignKind::AppendixA, 128, 16);
    c.campaign.radii = {4, 8, 16};
    runs.emplace_back("appendix-a", c);
  }
  {
    auto c = base_config(CampaignKind::HelmholtzProbe, 256, 2);
    c.ensemble.spectrum = {SpectrumKind::PowerLaw, 1.0, 1.0};
    c.campaign.radii = {8, 16, 32};
    runs.emplace_back("helmholtz-probe", c);
  }
  std::vector<std::string> differing;
  for (const auto& [name, cfg] : runs) {
    // The full-size growth run at one thread is shared with criterion 10 when it ran.
    const std::string one = "repro_" + name + "_t1";
    if (name == "growth" && fs::exists(work_dir() + "/growth/report.json")) {
      fs::create_directories(work_dir() + "/" + one);
      fs::copy_file(work_dir() + "/growth/report.json", work_dir() + "/" + one + "/report.json", fs::copy_options::overwrite_existing);
    } else {
      run_in(cfg, one, 1);
    }
    run_in(cfg, "repro_" + name + "_t4", 4);
    if (report_file(one) != report_file("repro_" + name + "_t4")) differing.push_back(name);
  }
  std::string d;
  for (const auto& n : differing) d += " " + n;
  return {differing.empty(), differing.empty() ? fmt("%zu campaign kinds byte-identical at 1 and 4 threads", runs.size()) : "reports differ:" + d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"discrete adjointness", adjointness},
      {"solver vs dense reference", dense_equivalence},
      {"constant coefficient", constant_coefficient},
      {"laminate", laminate},
      {"corrector invariants", corrector_invariants},
      {"sub-critical variance exponent", subcritical_exponent},
      {"critical log ratios", critical_log_ratios},
      {"variance oracle cross-check", oracle_cross_validation},
      {"average decay rate", average_decay},
      {"corrector growth", growth},
      {"two-scale error rate", two_scale},
      {"Helmholtz probes", helmholtz},
      {"reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int passed = 0, run = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    const int id = static_cast<int>(n) + 1;
    if (!only.empty() && !only.count(id)) continue;
    ++run;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed += o.pass;
    std::printf("criterion %2d %-32s %s  %s  [%.1f s]\n", id, criteria[n].first, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d PASS\n", passed, run);
  fs::remove_all(work_dir());
  return passed == run ? 0 : 1;
}
