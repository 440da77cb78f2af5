// homoglab command-line runner.
//
//   homoglab <subcommand> --config PATH [--out DIR] [--threads N] [--seed S] [--verbose]
//
// Exit codes: 0 success, 2 partial (some samples failed), 1 hard failure, 64 config error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "homoglab/campaign.hpp"

namespace {

constexpr int kExitConfig = 64;

struct Args {
  std::string config;
  std::string out;
  unsigned threads = homoglab::default_threads();
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "Experiment config (YAML)")->required();
  sub->add_option("--out", a.out, "Output directory (overrides output.dir)");
  sub->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", a.seed, "Override sampling.master_seed");
  sub->add_flag("--verbose", a.verbose, "Progress on stderr");
}

void print_config_error(const homoglab::ConfigError& e) {
  std::cerr << "config error (" << homoglab::to_string(e.kind()) << "):\n";
  for (const auto& m : e.issues()) std::cerr << "  " << m << "\n";
}

int run(homoglab::CampaignKind kind, const Args& a) {
  using namespace homoglab;
  ExperimentConfig cfg;
  try {
    cfg = parse_config(a.config);
    if (a.seed) cfg.sampling.master_seed = *a.seed;
    if (cfg.campaign.kind != kind)
      throw ConfigError(ErrorKind::ValidationError, {std::string("campaign.kind: config is '") + to_string(cfg.campaign.kind) + "' but the subcommand is '" +
                                                     to_string(kind) + "'"});
  } catch (const ConfigError& e) {
    print_config_error(e);
    return e.kind() == ErrorKind::IOError ? 1 : kExitConfig;
  }
  RunOptions opt;
  opt.out_dir = a.out;
  opt.threads = a.threads;
  opt.verbose = a.verbose;
  try {
    const auto res = run_campaign(cfg, opt);
    return exit_code(res.manifest.status);
  } catch (const ConfigError& e) {
    print_config_error(e);
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int plotdata(const Args& a) {
  using namespace homoglab;
  ExperimentConfig cfg;
  try {
    cfg = parse_config(a.config);
  } catch (const ConfigError& e) {
    print_config_error(e);
    return e.kind() == ErrorKind::IOError ? 1 : kExitConfig;
  }
  const std::string dir = a.out.empty() ? cfg.output_dir : a.out;
  try {
    const auto r = read_report(dir + "/report.json");
    for (const auto& p : emit_plotdata(r, dir, r.kind)) {
      if (a.verbose) std::cerr << "wrote " << p << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using homoglab::CampaignKind;
  CLI::App app{"homoglab: stochastic homogenization experiments on the discrete torus"};
  app.set_version_flag("--version", homoglab::kToolVersion);
  app.require_subcommand(1);
  Args args;
  const std::vector<std::pair<CampaignKind, const char*>> subs{
      {CampaignKind::Generate, "Sample coefficient fields and write them"},
      {CampaignKind::Corrector, "Extended corrector (phi, sigma) per sample"},
      {CampaignKind::Ahom, "Homogenized coefficient estimate with standard errors"},
      {CampaignKind::AvgDecay, "Decay of corrector gradient averages with radius"},
      {CampaignKind::Growth, "Corrector growth with distance"},
      {CampaignKind::TwoScale, "Two-scale expansion error versus eps"},
      {CampaignKind::AppendixA, "Linearized corrector annulus variance: exact and Monte Carlo"},
      {CampaignKind::HelmholtzProbe, "Decay of the solution of a localized divergence-form problem"},
  };
  std::vector<std::pair<CLI::App*, CampaignKind>> cmds;
  for (const auto& [k, help] : subs) {
    auto* sub = app.add_subcommand(homoglab::to_string(k), help);
    add_common(sub, args);
    cmds.emplace_back(sub, k);
  }
  auto* plot = app.add_subcommand("plotdata", "Rewrite plot CSVs from an existing report.json");
  add_common(plot, args);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (plot->parsed()) return plotdata(args);
  for (const auto& [sub, k] : cmds)
    if (sub->parsed()) return run(k, args);
  return kExitConfig;
}
