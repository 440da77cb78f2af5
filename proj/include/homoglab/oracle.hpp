#pragma once

// Independent reference computations:
//  - the linearized corrector's annulus variance as an exact lattice sum,
//  - its Monte Carlo counterpart from sampled Gaussian fields,
//  - dense direct solves of the heterogeneous operator on tiny grids.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <vector>

#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/geometry.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/rng.hpp"
#include "homoglab/solver.hpp"

namespace homoglab {

enum class VarianceRegime { SubCritical, CriticalD2, CriticalDgt2, SuperCritical };

inline const char* to_string(VarianceRegime r) {
  switch (r) {
    case VarianceRegime::SubCritical: return "SubCritical";
    case VarianceRegime::CriticalD2: return "CriticalD2";
    case VarianceRegime::CriticalDgt2: return "CriticalDgt2";
    case VarianceRegime::SuperCritical: return "SuperCritical";
  }
  return "Unknown";
}

struct VarianceCurve {
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> std_errors;  // empty for the exact curve
  std::size_t samples = 0;
  VarianceRegime regime = VarianceRegime::SubCritical;
};

inline double effective_beta(const SpectrumSpec& s, int d) {
  switch (s.kind) {
    case SpectrumKind::PowerLaw: return s.beta;
    case SpectrumKind::LorentzianCovariance: return 2.0;
    case SpectrumKind::WhiteNoise: return static_cast<double>(d) + 1.0;
  }
  return s.beta;
}

inline VarianceRegime variance_regime(const SpectrumSpec& s, int d) {
  const double b = effective_beta(s, d);
  if (b < std::min(2.0, static_cast<double>(d))) return VarianceRegime::SubCritical;
  if (b == 2.0 && d == 2) return VarianceRegime::CriticalD2;
  if (b == 2.0 && d > 2) return VarianceRegime::CriticalDgt2;
  return VarianceRegime::SuperCritical;
}

namespace detail {

inline void check_oracle_inputs(const SpectrumSpec& spec, const TorusGrid& g, const std::vector<double>& radii) {
  if (spec.kind == SpectrumKind::WhiteNoise) fail(ErrorKind::InvalidSpec, "variance oracle needs PowerLaw or LorentzianCovariance");
  validate(spec, g.dim());
  for (double R : radii)
    if (!(R >= 0.0) || R > g.period() / 4.0) fail(ErrorKind::InvalidSpec, "annulus radius must lie in [0, L h / 4]");
}

}  // namespace detail

/// sum_{k != 0} avg_{R<|x|<2R} |e^{-i k x} - 1|^2 * k_{1,h}^2 / |k|_h^4 * c_h(k) / (L h)^d.
inline VarianceCurve linearized_variance_exact(const SpectrumSpec& spec, const TorusGrid& g, const std::vector<double>& radii) {
  detail::check_oracle_inputs(spec, g, radii);
  const auto chat = discrete_spectrum(spec, g);
  // Weight per stored frequency, multiplicity included.
  std::vector<double> w(chat.size(), 0.0);
  for_each_frequency(g, [&](std::size_t i, const Frequency& f, double mult) {
    if (f.is_zero()) return;
    const double k2 = laplacian_symbol(g, f);
    const double k1 = std::norm(forward_symbol(g, f, 0));
    w[i] = mult * k1 / (k2 * k2) * chat[i] / g.volume();
  });
  VarianceCurve out;
  out.regime = variance_regime(spec, g.dim());
  for (double R : radii) {
    out.radii.push_back(R);
    const auto offs = (R > 0.0) ? annulus_offsets(g, R) : std::vector<Coord>{};
    if (offs.empty()) {
      out.values.push_back(0.0);
      continue;
    }
    const Spectrum s = forward_fft(indicator(g, {0, 0, 0}, offs, true));
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * (2.0 - 2.0 * s[i].real());
    out.values.push_back(v);
  }
  return out;
}

/// Linearized corrector of one sampled field: -Delta_h phi = D^-_1 omega.
inline ScalarField linearized_corrector(const ScalarField& omega) { return solve_poisson(backward_difference(omega, 0)); }

/// Monte Carlo annulus variance: per sample the spatially averaged
/// 2 (C(0) - C(x)) over the annulus, where C is the sample autocorrelation.
inline VarianceCurve linearized_variance_mc(const SpectrumSpec& spec, const TorusGrid& g, const std::vector<double>& radii,
                                            std::size_t N, std::uint64_t seed) {
  detail::check_oracle_inputs(spec, g, radii);
  if (N < 2) fail(ErrorKind::InvalidSpec, "need at least 2 samples");
  const auto chat = discrete_spectrum(spec, g);
  std::vector<std::vector<Coord>> annuli;
  for (double R : radii) annuli.push_back(R > 0.0 ? annulus_offsets(g, R) : std::vector<Coord>{});
  std::vector<std::vector<double>> per(radii.size());
  for (std::size_t s = 0; s < N; ++s) {
    const ScalarField omega = colour_noise(white_noise(g, derive_seed(seed, static_cast<std::uint32_t>(s))), chat);
    const ScalarField phi = linearized_corrector(omega);
    Spectrum sp = forward_fft(phi);
    for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = std::norm(sp[i]);
    ScalarField C = inverse_fft(sp);
    C *= 1.0 / static_cast<double>(g.size());
    for (std::size_t r = 0; r < radii.size(); ++r) {
      if (annuli[r].empty()) {
        per[r].push_back(0.0);
        continue;
      }
      per[r].push_back(2.0 * (C[0] - average_over(C, {0, 0, 0}, annuli[r])));
    }
  }
  VarianceCurve out;
  out.regime = variance_regime(spec, g.dim());
  out.samples = N;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    double m = 0.0;
    for (double v : per[r]) m += v;
    m /= static_cast<double>(N);
    double var = 0.0;
    for (double v : per[r]) var += (v - m) * (v - m);
    var /= static_cast<double>(N - 1);
    out.radii.push_back(radii[r]);
    out.values.push_back(m);
    out.std_errors.push_back(std::sqrt(var / static_cast<double>(N)));
  }
  return out;
}

// --- dense reference solver -----------------------------------------------------

inline constexpr std::size_t kDenseMaxCells = 4096;

namespace detail {

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Sparse forward-difference gradient, rows (j, x) -> j N + x.
inline Eigen::SparseMatrix<double> gradient_matrix(const TorusGrid& g) {
  const std::size_t N = g.size();
  const int d = g.dim();
  Triplets t;
  for (int j = 0; j < d; ++j)
    for (std::size_t x = 0; x < N; ++x) {
      const auto row = static_cast<int>(static_cast<std::size_t>(j) * N + x);
      t.emplace_back(row, static_cast<int>(g.neighbor(x, j, 1)), 1.0 / g.spacing());
      t.emplace_back(row, static_cast<int>(x), -1.0 / g.spacing());
    }
  Eigen::SparseMatrix<double> G(static_cast<int>(d * N), static_cast<int>(N));
  G.setFromTriplets(t.begin(), t.end());
  return G;
}

/// Face-to-face coefficient matrix, assembled entry by entry from the
/// discretization rule (harmonic face diagonal, averaged off-diagonal coupling).
inline Eigen::SparseMatrix<double> coefficient_matrix(const CoefficientField& a) {
  const TorusGrid& g = a.grid();
  const std::size_t N = g.size();
  const int d = g.dim();
  Triplets t;
  auto face = [&](int j, std::size_t x) { return static_cast<int>(static_cast<std::size_t>(j) * N + x); };
  for (int j = 0; j < d; ++j)
    for (std::size_t x = 0; x < N; ++x) {
      const double p = a(x, j, j), q = a(g.neighbor(x, j, 1), j, j);
      t.emplace_back(face(j, x), face(j, x), (p + q) != 0.0 ? 2.0 * p * q / (p + q) : 0.0);
      for (std::size_t y : {x, g.neighbor(x, j, 1)})
        for (int l = 0; l < d; ++l) {
          if (l == j) continue;
          const double c = 0.25 * a(y, j, l);
          if (c == 0.0) continue;
          t.emplace_back(face(j, x), face(l, y), c);
          t.emplace_back(face(j, x), face(l, g.neighbor(y, l, -1)), c);
        }
    }
  Eigen::SparseMatrix<double> K(static_cast<int>(d * N), static_cast<int>(d * N));
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

}  // namespace detail

/// Direct solve of -div(a grad u) = div g by dense LU; returns the mean-zero solution.
inline ScalarField dense_solve_reference(const CoefficientField& a, const VectorField& g, double* residual = nullptr) {
  const TorusGrid& grid = a.grid();
  require_same_grid(grid, g.grid(), "dense_solve_reference");
  const std::size_t N = grid.size();
  if (N > kDenseMaxCells) fail(ErrorKind::TooLarge, std::to_string(N) + " cells exceeds the dense limit of 4096");
  const auto G = detail::gradient_matrix(grid);
  const auto K = detail::coefficient_matrix(a);
  const Eigen::SparseMatrix<double> Gt = G.transpose();
  const Eigen::SparseMatrix<double> As = Gt * K * G;
  Eigen::MatrixXd A = Eigen::MatrixXd(As);
  Eigen::VectorXd gv(static_cast<Eigen::Index>(grid.dim() * N));
  for (int j = 0; j < grid.dim(); ++j)
    for (std::size_t x = 0; x < N; ++x) gv(static_cast<Eigen::Index>(static_cast<std::size_t>(j) * N + x)) = g[j][x];
  const Eigen::VectorXd b = -(Gt * gv);
  // Constants span the kernel; a rank-one shift selects the mean-zero solution.
  const double c = A.diagonal().mean();
  Eigen::MatrixXd M = A;
  M.array() += c / static_cast<double>(N);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) fail(ErrorKind::SingularSystem, "assembled operator is singular (rcond " + std::to_string(rc) + ")");
  Eigen::VectorXd u = lu.solve(b);
  u.array() -= u.mean();
  if (residual != nullptr) {
    const double bn = b.norm();
    *residual = bn > 0.0 ? (A * u - b).norm() / bn : (A * u).norm();
  }
  ScalarField out(grid);
  for (std::size_t x = 0; x < N; ++x) out[x] = u(static_cast<Eigen::Index>(x));
  return out;
}

}  // namespace homoglab
