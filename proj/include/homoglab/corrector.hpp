#pragma once

// Extended corrector (phi_i, q_i, sigma_ijk) and per-sample homogenized
// coefficients.
//
// sigma_ijk (j < k) lives on the cell corner x + h/2 (e_j + e_k) and is stored
// at array index x; then (div sigma_i)_j = sum_k D^-_k sigma_ijk lands on the
// face of component j, where q_ij lives.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/solver.hpp"

namespace homoglab {

/// Index of the pair (j, k), j < k, in the packed upper triangle.
inline int pair_index(int d, int j, int k) {
  int idx = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      if (a == j && b == k) return idx;
      ++idx;
    }
  fail(ErrorKind::IndexError, "pair index requires j < k < d");
}

struct ExtendedCorrector {
  TorusGrid grid;
  std::vector<ScalarField> phi;
  std::vector<VectorField> grad_phi;
  std::vector<VectorField> q;
  /// sigma_upper[i][pair_index(j, k)] for j < k.
  std::vector<std::vector<ScalarField>> sigma_upper;
  Eigen::MatrixXd ahom_sample;
  std::vector<double> solver_residuals;
  std::vector<int> solver_iterations;
  /// |div sigma_i - q_i| / |q_i| per direction (0 when q_i = 0).
  std::vector<double> sigma_residuals;

  int dim() const noexcept { return grid.dim(); }

  /// sigma_ijk with the skew symmetry applied on read.
  ScalarField sigma(int i, int j, int k) const {
    if (j == k) return ScalarField(grid);
    if (j < k) return sigma_upper[static_cast<std::size_t>(i)][static_cast<std::size_t>(pair_index(dim(), j, k))];
    ScalarField s = sigma_upper[static_cast<std::size_t>(i)][static_cast<std::size_t>(pair_index(dim(), k, j))];
    s *= -1.0;
    return s;
  }

  double sigma_at(int i, int j, int k, std::size_t cell) const {
    if (j == k) return 0.0;
    if (j < k) return sigma_upper[static_cast<std::size_t>(i)][static_cast<std::size_t>(pair_index(dim(), j, k))][cell];
    return -sigma_upper[static_cast<std::size_t>(i)][static_cast<std::size_t>(pair_index(dim(), k, j))][cell];
  }

  /// (div sigma_i)_j = sum_k D^-_k sigma_ijk.
  VectorField div_sigma(int i) const {
    VectorField out(grid);
    for (int j = 0; j < dim(); ++j)
      for (int k = 0; k < dim(); ++k)
        if (k != j) out[j] += backward_difference(sigma(i, j, k), k);
    return out;
  }
};

/// sigma_ijk from -Delta sigma_ijk = D^+_j q_ik - D^+_k q_ij, computed in one spectral pass.
inline ScalarField flux_corrector_component(const VectorField& qi, int j, int k) {
  const TorusGrid& g = qi.grid();
  Spectrum qk = forward_fft(qi[k]);
  const Spectrum qj = forward_fft(qi[j]);
  for_each_frequency(g, [&](std::size_t n, const Frequency& f, double) {
    if (f.is_zero()) {
      qk[n] = 0.0;
      return;
    }
    const double lap = laplacian_symbol(g, f);
    qk[n] = (forward_symbol(g, f, j) * qk[n] - forward_symbol(g, f, k) * qj[n]) / lap;
  });
  return inverse_fft(qk);
}

inline ExtendedCorrector compute_corrector(const DivFormOperator& op, const SolveOptions& opts = {}) {
  const TorusGrid& g = op.grid();
  const int d = g.dim();
  ExtendedCorrector c{g, {}, {}, {}, {}, Eigen::MatrixXd::Zero(d, d), {}, {}, {}};
  std::vector<VectorField> total;
  for (int i = 0; i < d; ++i) {
    const VectorField aei = flux_of_unit(op, i);
    SolveResult res{ScalarField(g)};
    try {
      res = solve_divform(op, aei, opts);
    } catch (const SolveError& e) {
      throw SolveError(e.kind(), "corrector direction " + std::to_string(i) + ": " + e.message(), e.best());
    }
    VectorField grad = discrete_gradient(res.u);
    VectorField flux = op.flux(grad);
    flux += aei;
    for (int j = 0; j < d; ++j) c.ahom_sample(j, i) = mean(flux[j]);
    c.phi.push_back(std::move(res.u));
    c.grad_phi.push_back(std::move(grad));
    c.solver_residuals.push_back(res.residual);
    c.solver_iterations.push_back(res.iters);
    total.push_back(std::move(flux));
  }
  for (int i = 0; i < d; ++i) {
    VectorField qi = total[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) {
      qi[j] += -c.ahom_sample(j, i);
      subtract_mean(qi[j]);
    }
    std::vector<ScalarField> pairs;
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) pairs.push_back(flux_corrector_component(qi, j, k));
    c.sigma_upper.push_back(std::move(pairs));
    c.q.push_back(std::move(qi));
  }
  for (int i = 0; i < d; ++i) {
    const double qn = norm(c.q[static_cast<std::size_t>(i)]);
    if (d == 1) {
      c.sigma_residuals.push_back(qn == 0.0 ? 0.0 : 1.0);
      continue;
    }
    VectorField diff = c.div_sigma(i);
    diff -= c.q[static_cast<std::size_t>(i)];
    c.sigma_residuals.push_back(qn > 0.0 ? norm(diff) / qn : norm(diff));
  }
  return c;
}

inline ExtendedCorrector compute_corrector(const CoefficientField& a, const SolveOptions& opts = {}) {
  return compute_corrector(DivFormOperator(a), opts);
}

struct MassiveCorrector {
  double T = 0.0;
  std::vector<ScalarField> phi;
  std::vector<double> residuals;
  std::vector<int> iterations;
};

/// phi_{T,i} with phi/T - div a(grad phi + e_i) = 0.
inline MassiveCorrector compute_massive_corrector(const DivFormOperator& op, double T, const SolveOptions& opts = {}) {
  MassiveCorrector m;
  m.T = T;
  for (int i = 0; i < op.grid().dim(); ++i) {
    SolveResult res{ScalarField(op.grid())};
    try {
      res = solve_massive(op, flux_of_unit(op, i), T, opts);
    } catch (const SolveError& e) {
      throw SolveError(e.kind(), "massive corrector direction " + std::to_string(i) + ": " + e.message(), e.best());
    }
    m.phi.push_back(std::move(res.u));
    m.residuals.push_back(res.residual);
    m.iterations.push_back(res.iters);
  }
  return m;
}

inline MassiveCorrector compute_massive_corrector(const CoefficientField& a, double T, const SolveOptions& opts = {}) {
  return compute_massive_corrector(DivFormOperator(a), T, opts);
}

struct AhomEstimate {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;
  std::vector<Eigen::MatrixXd> samples;
};

/// Mean and standard error of a list of per-sample matrices.
inline AhomEstimate summarize_ahom(std::vector<Eigen::MatrixXd> samples) {
  if (samples.size() < 2) fail(ErrorKind::InvalidSpec, "a_hom estimate needs at least 2 samples");
  const auto n = static_cast<double>(samples.size());
  AhomEstimate e;
  // Shifted accumulation keeps identical samples exact (zero spread).
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(samples[0].rows(), samples[0].cols());
  for (const auto& s : samples) shift += s - samples[0];
  e.mean = samples[0] + shift / n;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(e.mean.rows(), e.mean.cols());
  for (const auto& s : samples) var.array() += (s - e.mean).array().square();
  var /= (n - 1.0);
  e.std_error = (var / n).array().sqrt();
  e.samples = std::move(samples);
  return e;
}

}  // namespace homoglab
