#pragma once

// Scaling laws, the averaging fields g1 / g2 and their skew transform,
// Monte Carlo campaigns for average decay and corrector growth, power-law
// fits, and the deterministic Helmholtz decay probes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "homoglab/corrector.hpp"
#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/geometry.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/parallel.hpp"
#include "homoglab/rng.hpp"
#include "homoglab/solver.hpp"

namespace homoglab {

// --- laws ----------------------------------------------------------------------------

/// Decay factor for spatial averages: r^beta (beta < d), r^d / log r (beta = d), r^d (beta > d).
inline double pi_star(double r, double beta, int d) {
  if (!(r >= 0.0)) fail(ErrorKind::DomainError, "pi_star needs r >= 0");
  if (beta < d) return std::pow(r, beta);
  if (beta == d) {
    if (r < 2.0) fail(ErrorKind::DomainError, "the r^d / log r branch of pi_star needs r >= 2");
    return std::pow(r, d) / std::log(r);
  }
  return std::pow(r, d);
}

/// Corrector growth law.
inline double mu_star(double r, double beta, int d) {
  if (!(r >= 0.0)) fail(ErrorKind::DomainError, "mu_star is defined for r >= 0");
  if (beta < 2.0) return std::pow(r + 1.0, 1.0 - beta / 2.0);
  if (d == 1) fail(ErrorKind::DomainError, "mu_star has no branch for beta >= 2 in d = 1");
  if (beta == 2.0 && d == 2) return std::log(r + 2.0);
  if ((beta == 2.0 && d > 2) || (beta > 2.0 && d == 2)) return std::sqrt(std::log(r + 2.0));
  return 1.0;
}

/// The same growth law written in terms of a generic exponent alpha.
inline double mu_alpha_d(double r, double alpha, int d) {
  if (!(r >= 0.0) || !(alpha > 0.0)) fail(ErrorKind::DomainError, "mu_alpha_d needs r >= 0 and alpha > 0");
  const double lg = std::log(r + 2.0);
  if (alpha < 2.0) return std::exp((1.0 - 0.5 * alpha) * std::log1p(r));
  if (d < 2) fail(ErrorKind::DomainError, "mu_alpha_d has no branch for alpha >= 2 in d = 1");
  if (alpha == 2.0) return d == 2 ? lg : std::sqrt(lg);
  return d == 2 ? std::sqrt(lg) : 1.0;
}

enum class LawKind { PiStar, MuStar, MuAlphaD };

struct ScalingLaw {
  LawKind kind = LawKind::MuStar;
  double beta = 1.0;
  int d = 2;
  double alpha = 1.0;

  double operator()(double r) const {
    switch (kind) {
      case LawKind::PiStar: return pi_star(r, beta, d);
      case LawKind::MuStar: return mu_star(r, beta, d);
      case LawKind::MuAlphaD: return mu_alpha_d(r, alpha, d);
    }
    return 0.0;
  }
};

/// True when the growth law is a power of r (beta < 2); otherwise it is a log or constant.
inline bool mu_star_is_power(double beta) { return beta < 2.0; }

// --- averaging fields ------------------------------------------------------------------

inline double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
  }
  fail(ErrorKind::InvalidDimension, "unit ball volume needs d in {1,2,3}");
}

/// Radial derivative of the potential with -Delta h = 1_B / |B|.
inline double g1_radial_derivative(double rho, int d) {
  const double vb = unit_ball_volume(d);
  if (rho <= 1.0) return rho / (d * vb);
  return 1.0 / (d * vb * std::pow(rho, d - 1));
}

/// Frozen constants C(d) in |g1(y)| <= C(d) r (|y| + r)^{-d} and
/// |g2(y)| <= C(d) (1 + |y|)^{1-d}, calibrated once on realized fields.
/// Largest observed ratios: g1 0.96 (d=2), 2.14 (d=3); g2 0.33 (d=2), 0.36 (d=3).
inline double g1_bound_constant(int d) { return d == 1 ? 2.0 : (d == 2 ? 1.25 : 3.0); }
inline double g2_bound_constant(int d) { return d == 1 ? 1.0 : 0.5; }

enum class AveragingKind { G1Dipole, G2Mask, SkewG };

struct AveragingField {
  AveragingKind kind = AveragingKind::G1Dipole;
  double r = 0.0;
  Coord center{0, 0, 0};
  /// Sample-point shift in cell units: 0 for cell centres, 1/2 on the axes of
  /// a corner lattice (used when pairing with sigma_ijk).
  std::array<double, 3> shift{0, 0, 0};
  ScalarField potential;
  VectorField field;
  int j = -1;
  int k = -1;
};

/// Shift of the corner lattice carrying sigma_ijk.
inline std::array<double, 3> corner_shift(int j, int k) {
  std::array<double, 3> s{0, 0, 0};
  s[static_cast<std::size_t>(j)] = 0.5;
  s[static_cast<std::size_t>(k)] = 0.5;
  return s;
}

/// g1 = grad theta with -Delta_h theta = (1_{B_r(x)} - 1_{B_r}) / |B_r|, |B_r| the lattice ball volume.
inline AveragingField make_g1(const Coord& x, double r, const TorusGrid& g, std::array<double, 3> shift = {0, 0, 0}) {
  double xn = 0.0;
  for (int a = 0; a < g.dim(); ++a) xn += static_cast<double>(x[a]) * x[a];
  xn = std::sqrt(xn) * g.spacing();
  if (!(r > 0.0)) fail(ErrorKind::GeometryError, "g1 radius must be positive");
  if (xn + r > g.period() / 4.0 + 1e-12) fail(ErrorKind::GeometryError, "|x| + r exceeds a quarter of the torus period");
  const auto offs = ball_offsets(g, r, shift);
  ScalarField rhs = indicator(g, x, offs, false);
  rhs -= indicator(g, {0, 0, 0}, offs, false);
  rhs *= 1.0 / (static_cast<double>(offs.size()) * g.cell_volume());
  ScalarField theta = solve_poisson(rhs);
  VectorField field = discrete_gradient(theta);
  return {AveragingKind::G1Dipole, r, x, shift, std::move(theta), std::move(field)};
}

/// Potential H with H' the radial profile for -Delta h = 1_B/|B| - 1_{B_r}/|B_r| and H = 0 beyond r.
inline double g2_potential(double rho, double r, int d) {
  if (rho >= r) return 0.0;
  const double vbr = unit_ball_volume(d) * std::pow(r, d);
  auto tail = [&](double p) {  // integral of s^{1-d} from p to r
    if (d == 2) return std::log(r / p);
    return (std::pow(r, 2 - d) - std::pow(p, 2 - d)) / (2 - d);
  };
  auto outer = [&](double p) { return -((r * r - p * p) / 2.0 - std::pow(r, d) * tail(p)) / (d * vbr); };
  if (rho > 1.0) return outer(rho);
  return outer(1.0) - (1.0 - std::pow(r, d)) * (1.0 - rho * rho) / (2.0 * d * vbr);
}

/// g2 = grad theta with theta the sampled potential above; zero on faces between
/// two cells outside B_r.
inline AveragingField make_g2(double r, const TorusGrid& g) {
  if (!(r >= 1.0)) fail(ErrorKind::GeometryError, "g2 needs r >= 1 (it compares the unit ball with B_r)");
  if (r > g.period() / 4.0 + 1e-12) fail(ErrorKind::GeometryError, "r exceeds a quarter of the torus period");
  ScalarField theta(g);
  for (std::size_t i = 0; i < g.size(); ++i) theta[i] = g2_potential(g.distance_to_origin(g.coords(i)), r, g.dim());
  VectorField field = discrete_gradient(theta);
  return {AveragingKind::G2Mask, r, {0, 0, 0}, {0, 0, 0}, std::move(theta), std::move(field)};
}

/// The lattice weight w = -div g (integration against w equals integration of grad u against g).
inline ScalarField averaging_weight(const AveragingField& f) {
  ScalarField w = discrete_divergence(f.field);
  w *= -1.0;
  return w;
}

/// Discrete curl component D^+_k g_j - D^+_j g_k.
inline ScalarField discrete_curl(const VectorField& F, int j, int k) {
  return forward_difference(F[j], k) - forward_difference(F[k], j);
}

/// S g with S = e_j (x) e_k - e_k (x) e_j: (Sg)_j = g_k, (Sg)_k = -g_j, restaggered
/// so that each component sits on the face of its own direction.
inline AveragingField sigma_average_transform(const AveragingField& g, int j, int k) {
  const int d = g.field.dim();
  if (j == k) fail(ErrorKind::IndexError, "S is zero for j = k");
  if (j < 0 || k < 0 || j >= d || k >= d) fail(ErrorKind::IndexError, "index out of range");
  VectorField sg(g.field.grid());
  sg[j] = shifted(g.field[k], k, -1);
  sg[k] = shifted(g.field[j], j, -1);
  sg[k] *= -1.0;
  AveragingField out = g;
  out.kind = AveragingKind::SkewG;
  out.field = std::move(sg);
  out.j = j;
  out.k = k;
  return out;
}

/// integral of F . G over the torus (h^d sum over faces).
inline double integrate(const VectorField& F, const VectorField& G) { return dot(F, G) * F.grid().cell_volume(); }

/// integral of grad(sigma_ijk) . g for g built on the matching corner lattice.
inline double integrate_sigma(const ExtendedCorrector& c, int i, int j, int k, const AveragingField& g) {
  return integrate(discrete_gradient(c.sigma(i, j, k)), g.field);
}

// --- fits --------------------------------------------------------------------------------

struct SeriesPoint {
  double scale = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct PowerFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double exponent_stderr = 0.0;
  bool weighted = false;
};

/// Least squares of log(value) on log(scale); weights 1/var(log value) with
/// var(log value) = (stderr / value)^2. Falls back to an unweighted fit with a
/// residual-based error when any stderr is zero.
inline PowerFit fit_power_law(const std::vector<SeriesPoint>& s) {
  if (s.size() < 3) fail(ErrorKind::DegenerateSeries, "power-law fit needs at least 3 points");
  for (const auto& p : s)
    if (!(p.value > 0.0) || !(p.scale > 0.0)) fail(ErrorKind::DegenerateSeries, "power-law fit needs positive values and scales");
  bool weighted = true;
  for (const auto& p : s)
    if (!(p.std_error > 0.0)) weighted = false;
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (const auto& p : s) {
    const double x = std::log(p.scale), y = std::log(p.value);
    const double w = weighted ? std::pow(p.value / p.std_error, 2) : 1.0;
    S += w;
    Sx += w * x;
    Sy += w * y;
    Sxx += w * x * x;
    Sxy += w * x * y;
  }
  const double D = S * Sxx - Sx * Sx;
  if (!(D > 0.0)) fail(ErrorKind::DegenerateSeries, "scales are not distinct");
  PowerFit f;
  f.weighted = weighted;
  f.exponent = (S * Sxy - Sx * Sy) / D;
  f.intercept = (Sxx * Sy - Sx * Sxy) / D;
  if (weighted) {
    f.exponent_stderr = std::sqrt(S / D);
  } else {
    double rss = 0.0;
    for (const auto& p : s) {
      const double e = std::log(p.value) - f.intercept - f.exponent * std::log(p.scale);
      rss += e * e;
    }
    const double n = static_cast<double>(s.size());
    f.exponent_stderr = std::sqrt(rss / (n - 2.0) * n / D);
  }
  return f;
}

// --- reports -------------------------------------------------------------------------------

struct ScalingReport {
  std::string kind;
  std::vector<SeriesPoint> series;
  bool fit_valid = false;
  PowerFit fit;
  std::string fit_note;
  std::string predicted_law;
  double predicted_exponent = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> predicted;
  /// value / predicted law and the largest relative deviation from their mean.
  std::vector<double> ratios;
  double ratio_spread = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples_requested = 0;
  std::size_t samples_ok = 0;
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::vector<std::pair<std::string, double>> extras;
  std::string config_hash;
};

inline void attach_fit(ScalingReport& rep) {
  try {
    rep.fit = fit_power_law(rep.series);
    rep.fit_valid = true;
  } catch (const Error& e) {
    rep.fit_valid = false;
    rep.fit_note = std::string(to_string(e.kind())) + ": " + e.message();
  }
}

/// ratio_i = value_i / predicted_i; spread = max_i |ratio_i / mean - 1|.
inline void attach_ratios(ScalingReport& rep) {
  rep.ratios.clear();
  double m = 0.0;
  for (std::size_t i = 0; i < rep.series.size(); ++i) {
    rep.ratios.push_back(rep.predicted[i] > 0.0 ? rep.series[i].value / rep.predicted[i] : 0.0);
    m += rep.ratios.back();
  }
  if (rep.ratios.empty()) return;
  m /= static_cast<double>(rep.ratios.size());
  double spread = 0.0;
  for (double r : rep.ratios) spread = std::max(spread, m > 0.0 ? std::abs(r / m - 1.0) : std::numeric_limits<double>::infinity());
  rep.ratio_spread = spread;
}

/// Largest relative deviation of a list of ratios from their mean.
inline double ratio_spread(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m += v;
  m /= static_cast<double>(r.size());
  double s = 0.0;
  for (double v : r) s = std::max(s, std::abs(v / m - 1.0));
  return s;
}

// --- campaigns ------------------------------------------------------------------------------

struct CampaignSetup {
  TorusGrid grid = TorusGrid::make(2, 64);
  std::size_t samples = 8;
  unsigned threads = 1;
  SolveOptions solve;
  /// Coefficient field of sample s.
  std::function<CoefficientField(std::uint32_t)> sampler;
  /// Effective decay exponent of the ensemble (beta, or d + 1 for white noise).
  double beta = 1.0;
  std::uint64_t bootstrap_seed = 0;
};

/// Lattice point nearest to r * dir.
inline Coord lattice_point(const TorusGrid& g, double r, const std::array<double, 3>& dir) {
  Coord c{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) c[a] = static_cast<int>(std::lround(r * dir[a] / g.spacing()));
  return c;
}

/// The eight sphere directions: +-e_i and diagonals in 2d; +-e_i and +-(1,1,1)/sqrt 3 in 3d.
inline std::vector<std::array<double, 3>> growth_directions(int d) {
  std::vector<std::array<double, 3>> out;
  if (d == 1) return {{1, 0, 0}, {-1, 0, 0}};
  for (int a = 0; a < d; ++a) {
    std::array<double, 3> e{0, 0, 0};
    e[a] = 1.0;
    out.push_back(e);
    e[a] = -1.0;
    out.push_back(e);
  }
  if (d == 2) {
    const double s = 1.0 / std::sqrt(2.0);
    for (double a : {s, -s})
      for (double b : {s, -s}) out.push_back({a, b, 0});
  } else {
    const double s = 1.0 / std::sqrt(3.0);
    out.push_back({s, s, s});
    out.push_back({-s, -s, -s});
  }
  return out;
}

inline void check_campaign_radii(const TorusGrid& g, const std::vector<double>& radii) {
  for (double r : radii)
    if (r < 2.0 || r > g.period() / 8.0 + 1e-12) fail(ErrorKind::GeometryError, "campaign radii must lie in [2, L h / 8]");
}

namespace detail {

/// Mean and bootstrap standard error of sqrt(mean(x)) over samples.
inline std::pair<double, double> bootstrap_rms(const std::vector<double>& x, std::uint64_t seed, std::size_t tag, int B = 1000) {
  const std::size_t n = x.size();
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(n);
  PhiloxStream rng(seed, static_cast<std::uint32_t>(tag), Purpose::Bootstrap);
  double s = 0.0, s2 = 0.0;
  for (int b = 0; b < B; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[static_cast<std::size_t>(rng.next_u64() % n)];
    const double v = std::sqrt(acc / static_cast<double>(n));
    s += v;
    s2 += v * v;
  }
  const double mb = s / B;
  return {std::sqrt(m), std::sqrt(std::max(0.0, s2 / B - mb * mb))};
}

template <class T>
std::vector<T> collect(std::vector<SampleOutcome<T>>& outcomes, ScalingReport& rep) {
  std::vector<T> ok;
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    if (outcomes[s].value) {
      ok.push_back(std::move(*outcomes[s].value));
    } else {
      rep.failures.emplace_back(s, outcomes[s].error);
    }
  }
  rep.samples_ok = ok.size();
  return ok;
}

}  // namespace detail

/// Per-sample squared functional |F|^2 = sum_i (int grad phi_i . g1)^2 + sum_{i, j<k} (int grad sigma_ijk . g1)^2,
/// averaged over the directions, for each radius.
inline ScalingReport measure_average_decay(const CampaignSetup& setup, const std::vector<double>& radii,
                                           const std::vector<std::array<double, 3>>& directions) {
  const TorusGrid& g = setup.grid;
  const int d = g.dim();
  check_campaign_radii(g, radii);
  if (setup.samples < 8) fail(ErrorKind::InvalidSpec, "average decay needs at least 8 samples");
  if (directions.empty()) fail(ErrorKind::InvalidSpec, "need at least one direction");
  // The averaging fields are deterministic: build them once, for the cell lattice
  // (phi) and each corner lattice (sigma_ijk).
  struct Fields {
    AveragingField cell;
    std::vector<AveragingField> corner;
  };
  std::vector<std::vector<Fields>> fields(radii.size());
  for (std::size_t ri = 0; ri < radii.size(); ++ri)
    for (const auto& dir : directions) {
      const Coord x = lattice_point(g, radii[ri], dir);
      Fields f{make_g1(x, radii[ri], g), {}};
      for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) f.corner.push_back(make_g1(x, radii[ri], g, corner_shift(j, k)));
      fields[ri].push_back(std::move(f));
    }
  auto outcomes = run_samples<std::vector<double>>(setup.samples, setup.threads, [&](std::size_t s) {
    const auto a = setup.sampler(static_cast<std::uint32_t>(s));
    const auto c = compute_corrector(a, setup.solve);
    std::vector<VectorField> grad_sigma;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) grad_sigma.push_back(discrete_gradient(c.sigma(i, j, k)));
    std::vector<double> per(radii.size(), 0.0);
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      for (const auto& f : fields[ri]) {
        double F2 = 0.0;
        std::size_t gs = 0;
        for (int i = 0; i < d; ++i) {
          const double v = integrate(c.grad_phi[static_cast<std::size_t>(i)], f.cell.field);
          F2 += v * v;
          for (std::size_t p = 0; p < f.corner.size(); ++p) {
            const double w = integrate(grad_sigma[gs++], f.corner[p].field);
            F2 += w * w;
          }
        }
        per[ri] += F2;
      }
      per[ri] /= static_cast<double>(fields[ri].size());
    }
    return per;
  });
  ScalingReport rep;
  rep.kind = "avg-decay";
  rep.samples_requested = setup.samples;
  const auto ok = detail::collect(outcomes, rep);
  const double bd = std::min(setup.beta, static_cast<double>(d));
  rep.predicted_law = "pi_*^{-1/2}(r)";
  rep.predicted_exponent = -bd / 2.0;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    std::vector<double> x;
    for (const auto& v : ok) x.push_back(v[ri]);
    const double r = radii[ri];
    if (x.empty()) {
      rep.series.push_back({r, 0.0, 0.0, 0});
    } else {
      const auto [rms, se] = detail::bootstrap_rms(x, setup.bootstrap_seed, ri);
      rep.series.push_back({r, rms / r, se / r, x.size()});
      rep.extras.emplace_back("rms_F_r" + std::to_string(static_cast<long long>(r)), rms);
    }
    rep.predicted.push_back(pi_star(r, setup.beta, d) > 0 ? 1.0 / std::sqrt(pi_star(r, setup.beta, d)) : 0.0);
  }
  attach_fit(rep);
  attach_ratios(rep);
  return rep;
}

/// Per sample and radius: mean over the directions of
/// sum over components of avg_{B(x)} |psi - avg_B psi|^2, psi ranging over phi_i and sigma_ijk.
inline ScalingReport measure_corrector_growth(const CampaignSetup& setup, const std::vector<double>& radii) {
  const TorusGrid& g = setup.grid;
  const int d = g.dim();
  check_campaign_radii(g, radii);
  if (setup.samples < 2) fail(ErrorKind::InvalidSpec, "growth needs at least 2 samples");
  const auto dirs = growth_directions(d);
  const auto cell_ball = ball_offsets(g, 1.0);
  std::vector<std::vector<Coord>> corner_balls;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) corner_balls.push_back(ball_offsets(g, 1.0, corner_shift(j, k)));
  auto ball_stat = [](const ScalarField& u, const std::vector<Coord>& ball, const Coord& x) {
    const double m0 = average_over(u, {0, 0, 0}, ball);
    double s = 0.0;
    for (const auto& o : ball) {
      const double v = u.at({x[0] + o[0], x[1] + o[1], x[2] + o[2]}) - m0;
      s += v * v;
    }
    return s / static_cast<double>(ball.size());
  };
  auto outcomes = run_samples<std::vector<double>>(setup.samples, setup.threads, [&](std::size_t s) {
    const auto a = setup.sampler(static_cast<std::uint32_t>(s));
    const auto c = compute_corrector(a, setup.solve);
    std::vector<double> per(radii.size(), 0.0);
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      for (const auto& dir : dirs) {
        const Coord x = lattice_point(g, radii[ri], dir);
        double st = 0.0;
        for (int i = 0; i < d; ++i) {
          st += ball_stat(c.phi[static_cast<std::size_t>(i)], cell_ball, x);
          std::size_t p = 0;
          for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k, ++p)
              // sigma_ijk and sigma_ikj carry the same magnitude.
              st += 2.0 * ball_stat(c.sigma_upper[static_cast<std::size_t>(i)][p], corner_balls[p], x);
        }
        per[ri] += st;
      }
      per[ri] /= static_cast<double>(dirs.size());
    }
    return per;
  });
  ScalingReport rep;
  rep.kind = "growth";
  rep.samples_requested = setup.samples;
  const auto ok = detail::collect(outcomes, rep);
  rep.predicted_law = "mu_*(r)";
  if (mu_star_is_power(setup.beta)) rep.predicted_exponent = 1.0 - setup.beta / 2.0;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double r = radii[ri];
    std::vector<double> x;
    for (const auto& v : ok) x.push_back(v[ri]);
    if (x.empty()) {
      rep.series.push_back({r, 0.0, 0.0, 0});
    } else {
      double m = 0.0;
      for (double v : x) m += v;
      m /= static_cast<double>(x.size());
      double var = 0.0;
      for (double v : x) var += (v - m) * (v - m);
      var = x.size() > 1 ? var / static_cast<double>(x.size() - 1) : 0.0;
      const double se_m = std::sqrt(var / static_cast<double>(x.size()));
      const double val = std::sqrt(m);
      rep.series.push_back({r, val, val > 0.0 ? se_m / (2.0 * val) : 0.0, x.size()});
    }
    rep.predicted.push_back(mu_star(r, setup.beta, d));
  }
  attach_fit(rep);
  attach_ratios(rep);
  return rep;
}

// --- Helmholtz probes -----------------------------------------------------------------------

enum class ProbeKind { LemmaLEas, LemmaLEap };

struct HelmholtzProbe {
  ProbeKind kind = ProbeKind::LemmaLEap;
  double r = 4.0;
  double gamma = 1.0;
};

/// Smooth cutoff: 1 on [0, 1/2], cos^2 ramp to 0 at 1.
inline double probe_cutoff(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double c = std::cos(std::numbers::pi * (t - 0.5));
  return c * c;
}

/// Probe right-hand side g = e_1 G(|y|), sampled at the faces of axis 0.
inline VectorField probe_field(const TorusGrid& g, const HelmholtzProbe& p) {
  VectorField F(g);
  const int d = g.dim();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.distance_to_origin(g.coords(i), {0.5, 0, 0});
    double v = 0.0;
    if (p.kind == ProbeKind::LemmaLEas) {
      v = std::min(std::pow(p.r, -d), std::pow(y, -d));
    } else {
      v = std::pow(y + 1.0, -p.gamma) * probe_cutoff(y / p.r);
    }
    F[0][i] = v;
  }
  return F;
}

inline double probe_envelope(const HelmholtzProbe& p, double x, int d) {
  if (p.kind == ProbeKind::LemmaLEas) return std::log(x / p.r + 2.0) / std::pow(x + p.r, d);
  return std::pow(p.r, d - p.gamma) / std::pow(x, d);
}

/// Exact whole-space D_1 v on the e_1 axis for a = Id and the LEas probe:
/// r^{-d} f(rho / r) with f(t) = -1/d inside the ball and
/// f(t) = t^{-d} ((d - 1)(1/d + log t) - 1) outside.
inline double las_axis_gradient(double rho, double r, int d) {
  const double t = rho / r;
  const double f = (t <= 1.0) ? -1.0 / d : std::pow(t, -d) * ((d - 1) * (1.0 / d + std::log(t)) - 1.0);
  return std::pow(r, -d) * f;
}

/// Root mean square of |grad v| over cells with R <= |x| < 2R.
inline std::pair<double, std::size_t> annulus_rms(const VectorField& G, double R) {
  const TorusGrid& g = G.grid();
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.distance_to_origin(g.coords(i));
    if (x < R || x >= 2.0 * R) continue;
    for (int j = 0; j < g.dim(); ++j) s += G[j][i] * G[j][i];
    ++n;
  }
  return {n ? std::sqrt(s / static_cast<double>(n)) : 0.0, n};
}

struct ProbeSolution {
  ScalarField v;
  VectorField grad_v;
  ScalingReport report;
};

/// Solve div(a grad v + g) = 0 for the probe g and report annulus RMS of grad v.
inline ProbeSolution helmholtz_decay_probe(const CoefficientField& a, const HelmholtzProbe& p, const std::vector<double>& radii,
                                          const SolveOptions& opts = {}) {
  const TorusGrid& g = a.grid();
  for (double R : radii)
    if (!(R > 0.0) || 2.0 * R > g.period() / 4.0 + 1e-12) fail(ErrorKind::GeometryError, "probe annuli must lie within a quarter of the torus");
  if (p.kind == ProbeKind::LemmaLEap && 2.0 * p.r > g.period() / 2.0) fail(ErrorKind::GeometryError, "probe support does not fit the torus");
  const auto res = solve_divform(a, probe_field(g, p), opts);
  ProbeSolution out{res.u, discrete_gradient(res.u), {}};
  ScalingReport& rep = out.report;
  rep.kind = p.kind == ProbeKind::LemmaLEas ? "helmholtz-LEas" : "helmholtz-LEap";
  rep.samples_requested = rep.samples_ok = 1;
  rep.predicted_law = p.kind == ProbeKind::LemmaLEas ? "log(|x|/r+2)/(|x|+r)^d" : "r^{d-gamma}/|x|^d";
  rep.predicted_exponent = -static_cast<double>(g.dim());
  for (double R : radii) {
    const auto [rms, n] = annulus_rms(out.grad_v, R);
    rep.series.push_back({R, rms, 0.0, n});
    rep.predicted.push_back(probe_envelope(p, R, g.dim()));
  }
  rep.extras.emplace_back("solver_iterations", res.iters);
  rep.extras.emplace_back("solver_residual", res.residual);
  attach_fit(rep);
  attach_ratios(rep);
  return out;
}

struct ProfilePoint {
  double rho = 0.0;
  double measured = 0.0;
  double exact = 0.0;
};

/// D^+_1 v at cells (rho, 0, ...) against the exact profile evaluated at the face rho + h/2.
inline std::vector<ProfilePoint> las_axis_profile(const VectorField& grad_v, double r, const std::vector<double>& rhos) {
  const TorusGrid& g = grad_v.grid();
  std::vector<ProfilePoint> out;
  for (double rho : rhos) {
    const int n = static_cast<int>(std::lround(rho / g.spacing()));
    const double m = grad_v[0].at({n, 0, 0});
    out.push_back({rho, m, las_axis_gradient((n + 0.5) * g.spacing(), r, g.dim())});
  }
  return out;
}

}  // namespace homoglab
