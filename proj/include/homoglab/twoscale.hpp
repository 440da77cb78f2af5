#pragma once

// Two-scale expansion experiments on the unit torus. The fine grid has period 1
// and L = c / eps cells, c cells per correlation length eps, so a corrector
// computed on it already carries the eps scaling.
//
// With v = u_hom,eps, psi_i = D^+_i v (stored at the cell index) and
// z = u - (v + sum_i phi_i psi_i), the discrete error equation
//   -div(a grad z) = div((g - g_eps) + G_phi + G_sigma),
//   (G_phi)_j   = sum_i a_j phi_i(x + e_j) D^+_j psi_i,
//   (G_sigma)_j = -sum_{i,k} sigma_ijk(x - e_k) D^-_k psi_i,
// holds exactly for diagonal coefficients when the homogenized operator is
// -sum_j D^-_j sum_i A_ji D^+_i.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "homoglab/corrector.hpp"
#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/parallel.hpp"
#include "homoglab/rng.hpp"
#include "homoglab/scaling.hpp"
#include "homoglab/solver.hpp"

namespace homoglab {

/// Average of e^{i k . y} over the ball of radius rho, as a function of t = |k| rho.
inline double ball_mode_factor(double t, int d) {
  if (t < 1e-8) return 1.0;
  switch (d) {
    case 1: return std::sin(t) / t;
    case 2: return 2.0 * std::cyl_bessel_j(1.0, t) / t;
    case 3:
      // The closed form cancels badly for small t.
      if (t < 1e-2) return 1.0 - t * t / 10.0 + t * t * t * t / 280.0;
      return 3.0 * (std::sin(t) - t * std::cos(t)) / (t * t * t);
  }
  fail(ErrorKind::InvalidDimension, "ball average needs d in {1,2,3}");
}

/// Moving average over balls of radius eps * (L h), applied as a Fourier multiplier.
inline ScalarField steklov_average(const ScalarField& u, double eps) {
  const TorusGrid& g = u.grid();
  if (!(eps * g.side() >= 1.0 - 1e-12)) fail(ErrorKind::ScaleTooSmall, "Steklov radius is below one cell");
  const double rho = eps * g.period();
  Spectrum s = forward_fft(u);
  for_each_frequency(g, [&](std::size_t n, const Frequency& f, double) {
    double k2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) k2 += f.k[a] * f.k[a];
    s[n] *= ball_mode_factor(std::sqrt(k2) * rho, g.dim());
  });
  return inverse_fft(s);
}

inline VectorField steklov_average(const VectorField& F, double eps) {
  VectorField out(F.grid());
  for (int j = 0; j < F.dim(); ++j) out[j] = steklov_average(F[j], eps);
  return out;
}

/// Mean-zero solution of -sum_j D^-_j sum_i A_ji D^+_i u = div g.
inline ScalarField solve_homogenized(const Eigen::MatrixXd& ahom, const VectorField& g) {
  const TorusGrid& grid = g.grid();
  const int d = grid.dim();
  if (ahom.rows() != d || ahom.cols() != d || !ahom.allFinite()) fail(ErrorKind::SingularAhom, "a_hom must be a finite d x d matrix");
  std::vector<Spectrum> gh;
  for (int j = 0; j < d; ++j) gh.push_back(forward_fft(g[j]));
  Spectrum out(grid);
  for_each_frequency(grid, [&](std::size_t n, const Frequency& f, double) {
    if (f.is_zero()) {
      out[n] = 0.0;
      return;
    }
    Complex q = 0.0, rhs = 0.0;
    for (int j = 0; j < d; ++j) {
      const Complex bj = backward_symbol(grid, f, j);
      rhs += bj * gh[static_cast<std::size_t>(j)][n];
      for (int i = 0; i < d; ++i) q -= bj * ahom(j, i) * forward_symbol(grid, f, i);
    }
    if (!(q.real() > 1e-14 * laplacian_symbol(grid, f))) fail(ErrorKind::SingularAhom, "a_hom quadratic form is not positive on a lattice frequency");
    out[n] = rhs / q;
  });
  return inverse_fft(out);
}

/// -sum_j D^-_j sum_i A_ji D^+_i u.
inline ScalarField apply_homogenized(const Eigen::MatrixXd& ahom, const ScalarField& u) {
  const TorusGrid& g = u.grid();
  const VectorField G = discrete_gradient(u);
  VectorField F(g);
  for (int j = 0; j < g.dim(); ++j)
    for (int i = 0; i < g.dim(); ++i) {
      ScalarField t = G[i];
      t *= ahom(j, i);
      F[j] += t;
    }
  ScalarField r = discrete_divergence(F);
  r *= -1.0;
  return r;
}

struct TwoScaleOptions {
  SolveOptions solve;
  /// Ensemble exponent entering mu_*.
  double beta = 3.0;
};

struct TwoScaleResult {
  double eps = 0.0;
  /// ||grad z|| over the unit torus.
  double err_h1 = 0.0;
  /// err_h1 / (int mu_*^2 |grad g|^2)^{1/2}.
  double err_normalized = 0.0;
  double weighted_norm = 0.0;
  /// ||g - g_eps|| and ||G_phi + G_sigma||.
  double g_term = 0.0;
  double corrector_term = 0.0;
  /// eps mu_*(1 / eps) and err_normalized / predicted.
  double predicted = 0.0;
  double ratio = 0.0;
  /// ||grad z - grad z'|| / ||grad u||, z' the solution of the error equation.
  double consistency = 0.0;
  int fine_side = 0;
};

/// (int mu_*(|x|)^2 |grad g|^2)^{1/2} with |x| the torus distance to the origin.
inline double weighted_gradient_norm(const VectorField& g, double beta) {
  const TorusGrid& grid = g.grid();
  const int d = grid.dim();
  double s = 0.0;
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l) {
      const ScalarField D = forward_difference(g[j], l);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double m = mu_star(grid.distance_to_origin(grid.coords(i)), beta, d);
        s += m * m * D[i] * D[i];
      }
    }
  return std::sqrt(s * grid.cell_volume());
}

inline TwoScaleResult two_scale_error(const CoefficientField& a, const ExtendedCorrector& c, const VectorField& g, double eps,
                                      const TwoScaleOptions& opts = {}) {
  const TorusGrid& grid = a.grid();
  const int d = grid.dim();
  if (!(c.grid == grid) || !(g.grid() == grid)) fail(ErrorKind::GridMismatch, "coefficient, corrector and g must share one grid");
  if (!a.is_diagonal()) fail(ErrorKind::InvalidSpec, "two-scale error supports diagonal coefficients only");
  const DivFormOperator op(a);
  const Eigen::MatrixXd& A = c.ahom_sample;

  const SolveResult su = solve_divform(op, g, opts.solve);
  const ScalarField v = steklov_average(solve_homogenized(A, g), eps);
  std::vector<ScalarField> psi;
  for (int i = 0; i < d; ++i) psi.push_back(forward_difference(v, i));

  ScalarField w = v;
  for (int i = 0; i < d; ++i) {
    ScalarField t = c.phi[static_cast<std::size_t>(i)];
    for (std::size_t n = 0; n < t.size(); ++n) t[n] *= psi[static_cast<std::size_t>(i)][n];
    w += t;
  }
  const VectorField grad_z = discrete_gradient(su.u - w);

  VectorField Gc(grid);
  for (int j = 0; j < d; ++j) {
    const ScalarField& aj = op.face_diagonal(j);
    for (int i = 0; i < d; ++i) {
      const ScalarField phis = shifted(c.phi[static_cast<std::size_t>(i)], j, +1);
      const ScalarField dpsi = forward_difference(psi[static_cast<std::size_t>(i)], j);
      for (std::size_t n = 0; n < grid.size(); ++n) Gc[j][n] += aj[n] * phis[n] * dpsi[n];
      for (int k = 0; k < d; ++k) {
        if (k == j) continue;
        const ScalarField sig = shifted(c.sigma(i, j, k), k, -1);
        const ScalarField bpsi = backward_difference(psi[static_cast<std::size_t>(i)], k);
        for (std::size_t n = 0; n < grid.size(); ++n) Gc[j][n] -= sig[n] * bpsi[n];
      }
    }
  }
  VectorField gdiff = g;
  gdiff -= steklov_average(g, eps);
  VectorField rhs = gdiff;
  rhs += Gc;
  const SolveResult sz = solve_divform(op, rhs, opts.solve);
  VectorField diff = discrete_gradient(sz.u);
  diff -= grad_z;

  TwoScaleResult r;
  r.eps = eps;
  r.fine_side = grid.side();
  r.err_h1 = l2_norm(grad_z);
  r.weighted_norm = weighted_gradient_norm(g, opts.beta);
  r.err_normalized = r.weighted_norm > 0.0 ? r.err_h1 / r.weighted_norm : 0.0;
  r.g_term = l2_norm(gdiff);
  r.corrector_term = l2_norm(Gc);
  r.predicted = eps * mu_star(1.0 / eps, opts.beta, d);
  r.ratio = r.err_normalized / r.predicted;
  const double un = l2_norm(discrete_gradient(su.u));
  r.consistency = un > 0.0 ? l2_norm(diff) / un : l2_norm(diff);
  return r;
}

// --- campaign ----------------------------------------------------------------------

/// One band-limited term: g_j(x) += amplitude_j cos(2 pi n . x + phase), sampled on the faces of g_j.
struct MacroMode {
  Coord n{1, 0, 0};
  std::array<double, 3> amplitude{1, 0, 0};
  double phase = 0.0;
};

inline VectorField macro_field(const TorusGrid& g, const std::vector<MacroMode>& modes) {
  VectorField F(g);
  const double h = g.spacing();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord c = g.coords(i);
    for (int j = 0; j < g.dim(); ++j) {
      double v = 0.0;
      for (const auto& m : modes) {
        if (m.amplitude[j] == 0.0) continue;
        double ph = m.phase;
        for (int a = 0; a < g.dim(); ++a) ph += 2.0 * std::numbers::pi * m.n[a] * (c[a] + (a == j ? 0.5 : 0.0)) * h;
        v += m.amplitude[j] * std::cos(ph);
      }
      F[j][i] = v;
    }
  }
  return F;
}

/// Piecewise-constant refinement: each coarse cell becomes c^d fine cells.
inline ScalarField upsample(const ScalarField& u, int c, const TorusGrid& fine) {
  ScalarField out(fine);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    Coord x = fine.coords(i);
    for (int a = 0; a < fine.dim(); ++a) x[a] /= c;
    out[i] = u.at(x);
  }
  return out;
}

struct TwoScaleCampaign {
  int d = 2;
  std::vector<double> eps{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  int cells_per_unit = 4;
  std::size_t samples = 8;
  SpectrumSpec spectrum{SpectrumKind::WhiteNoise, 1.0, 1.0};
  TransformSpec transform{0.2, 2.0, TransformShape::Tanh};
  std::vector<MacroMode> modes{{{1, 0, 0}, {1, 0, 0}, 0.0}, {{0, 1, 0}, {0, 1, 0}, 0.5}};
  std::uint64_t seed = 1;
  unsigned threads = 1;
  TwoScaleOptions options;
};

struct TwoScaleCampaignResult {
  ScalingReport report;
  /// rows[e][s] for eps index e and sample s (failed samples omitted).
  std::vector<std::vector<TwoScaleResult>> rows;
  /// Constant-coefficient control at each eps.
  std::vector<TwoScaleResult> control;
};

inline TorusGrid two_scale_grid(int d, double eps, int c) {
  const double Lf = c / eps;
  const int L = static_cast<int>(std::lround(Lf));
  if (std::abs(Lf - L) > 1e-9) fail(ErrorKind::InvalidSpec, "cells_per_unit / eps must be an integer");
  return TorusGrid::make(d, L, 1.0 / L);
}

/// Coefficient for (sample, eps index): Gaussian field on the coarse lattice of
/// correlation cells, transformed and refined to the fine grid.
inline CoefficientField two_scale_medium(const TwoScaleCampaign& cfg, std::size_t e, std::uint32_t s) {
  const TorusGrid fine = two_scale_grid(cfg.d, cfg.eps[e], cfg.cells_per_unit);
  const TorusGrid coarse = TorusGrid::make(cfg.d, fine.side() / cfg.cells_per_unit, 1.0);
  const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, static_cast<std::uint32_t>(e)), s);
  const ScalarField omega = sample_gaussian_field(cfg.spectrum, coarse, seed);
  return lipschitz_transform(upsample(omega, cfg.cells_per_unit, fine), cfg.transform);
}

inline TwoScaleCampaignResult run_two_scale(const TwoScaleCampaign& cfg) {
  if (cfg.samples < 2) fail(ErrorKind::InvalidSpec, "two-scale campaign needs at least 2 samples");
  if (cfg.cells_per_unit < 1) fail(ErrorKind::InvalidSpec, "cells_per_unit must be >= 1");
  TwoScaleCampaignResult out;
  ScalingReport& rep = out.report;
  rep.kind = "two-scale";
  rep.samples_requested = cfg.samples;
  rep.samples_ok = cfg.samples;
  rep.predicted_law = "eps mu_*(1/eps)";
  const std::size_t ne = cfg.eps.size();
  auto outcomes = run_samples<TwoScaleResult>(ne * cfg.samples, cfg.threads, [&](std::size_t job) {
    const std::size_t e = job / cfg.samples;
    const auto s = static_cast<std::uint32_t>(job % cfg.samples);
    const auto a = two_scale_medium(cfg, e, s);
    const auto c = compute_corrector(a, cfg.options.solve);
    return two_scale_error(a, c, macro_field(a.grid(), cfg.modes), cfg.eps[e], cfg.options);
  });
  out.rows.resize(ne);
  for (std::size_t job = 0; job < outcomes.size(); ++job) {
    if (outcomes[job].value) {
      out.rows[job / cfg.samples].push_back(*outcomes[job].value);
    } else {
      rep.failures.emplace_back(job, outcomes[job].error);
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& rows = out.rows[e];
    rep.samples_ok = std::min(rep.samples_ok, rows.size());
    double m = 0.0, m2 = 0.0, cons = 0.0;
    for (const auto& r : rows) {
      m += r.err_normalized;
      cons = std::max(cons, r.consistency);
    }
    const double n = static_cast<double>(rows.size());
    if (!rows.empty()) m /= n;
    for (const auto& r : rows) m2 += (r.err_normalized - m) * (r.err_normalized - m);
    const double se = rows.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    rep.series.push_back({cfg.eps[e], m, se, rows.size()});
    rep.predicted.push_back(cfg.eps[e] * mu_star(1.0 / cfg.eps[e], cfg.options.beta, cfg.d));
    rep.extras.emplace_back("max_consistency_eps" + std::to_string(e), cons);
  }
  // Constant medium at the mean of the transform's range.
  for (std::size_t e = 0; e < ne; ++e) {
    const TorusGrid fine = two_scale_grid(cfg.d, cfg.eps[e], cfg.cells_per_unit);
    const double mid = 0.5 * (1.0 + cfg.transform.lambda);
    const auto a = CoefficientField::constant(fine, mid * Eigen::MatrixXd::Identity(cfg.d, cfg.d));
    const auto c = compute_corrector(a, cfg.options.solve);
    out.control.push_back(two_scale_error(a, c, macro_field(fine, cfg.modes), cfg.eps[e], cfg.options));
    rep.extras.emplace_back("control_err_h1_eps" + std::to_string(e), out.control.back().err_h1);
  }
  // Series ascending in eps.
  std::vector<std::size_t> order(ne);
  for (std::size_t e = 0; e < ne; ++e) order[e] = e;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cfg.eps[x] < cfg.eps[y]; });
  std::vector<SeriesPoint> series;
  std::vector<double> predicted;
  for (std::size_t e : order) {
    series.push_back(rep.series[e]);
    predicted.push_back(rep.predicted[e]);
  }
  rep.series = std::move(series);
  rep.predicted = std::move(predicted);
  attach_fit(rep);
  attach_ratios(rep);
  if (!cfg.eps.empty()) {
    const double lo = rep.series.front().scale, hi = rep.series.back().scale;
    const double p_lo = lo * mu_star(1.0 / lo, cfg.options.beta, cfg.d), p_hi = hi * mu_star(1.0 / hi, cfg.options.beta, cfg.d);
    rep.predicted_exponent = std::log(p_hi / p_lo) / std::log(hi / lo);
  }
  return out;
}

}  // namespace homoglab
