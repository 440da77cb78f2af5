#pragma once

// Heterogeneous elliptic solves on the torus:
//   -div(a grad u) = div g            (solve_divform)
//   u/T - div(a grad u) = div g       (solve_massive)
//   -Delta_h u = rhs - mean(rhs)      (solve_poisson)
//
// The coefficient acts on face fields: the diagonal entry a_jj is averaged
// harmonically across the face, off-diagonal couplings go through cell
// averages of the neighbouring faces (see DivFormOperator::flux).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/lattice.hpp"

namespace homoglab {

enum class KrylovMethod { Auto, CG, BiCGStab };

struct SolveOptions {
  double tol = 1e-9;
  /// 0 selects the default of 10 L iterations.
  int max_iter = 0;
  bool precondition = true;
  KrylovMethod method = KrylovMethod::Auto;
  /// Called as on_iteration(iteration, relative residual) after each step.
  std::function<void(int, double)> on_iteration;
};

inline void validate(const SolveOptions& o) {
  if (!(o.tol > 0.0 && o.tol <= 1e-3)) fail(ErrorKind::InvalidSpec, "solver tol must lie in (0, 1e-3]");
  if (o.max_iter < 0) fail(ErrorKind::InvalidSpec, "max_iter must be >= 1 (or 0 for the default)");
}

struct SolveResult {
  ScalarField u;
  double residual = 0.0;
  int iters = 0;
  std::string method;
  /// Relative residual |r_n| / |b| after each iteration.
  std::vector<double> residual_history;
  /// Preconditioned residual sqrt(r_n . P r_n) / sqrt(b . P b) (CG only).
  std::vector<double> preconditioned_history;
};

/// Raised on NoConvergence / IllConditioned; carries the best iterate found.
class SolveError : public Error {
 public:
  SolveError(ErrorKind kind, const std::string& message, SolveResult best)
      : Error(kind, message), best_(std::move(best)) {}
  const SolveResult& best() const noexcept { return best_; }

 private:
  SolveResult best_;
};

inline double harmonic_mean(double a, double b) {
  const double s = a + b;
  return s != 0.0 ? 2.0 * a * b / s : 0.0;
}

class DivFormOperator {
 public:
  explicit DivFormOperator(const CoefficientField& a)
      : a_(a), diagonal_(a.is_diagonal()), symmetric_(a.is_symmetric()) {
    const TorusGrid& g = a.grid();
    for (int j = 0; j < g.dim(); ++j) {
      const ScalarField& ajj = a.entry(j, j);
      ScalarField next = shifted(ajj, j, +1);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = harmonic_mean(ajj[i], next[i]);
      face_diag_.push_back(std::move(next));
    }
  }

  const TorusGrid& grid() const noexcept { return a_.grid(); }
  const CoefficientField& coefficient() const noexcept { return a_; }
  bool symmetric() const noexcept { return symmetric_; }
  bool diagonal() const noexcept { return diagonal_; }
  const ScalarField& face_diagonal(int j) const noexcept { return face_diag_[static_cast<std::size_t>(j)]; }

  /// a applied to a face field G.
  VectorField flux(const VectorField& G) const {
    const TorusGrid& g = grid();
    const int d = g.dim();
    VectorField out(g);
    for (int j = 0; j < d; ++j) {
      const auto& fd = face_diag_[static_cast<std::size_t>(j)];
      auto& o = out[j];
      const auto& gj = G[j];
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = fd[i] * gj[i];
    }
    if (diagonal_) return out;
    // Cell averages of the two faces bounding each cell.
    std::vector<ScalarField> W;
    for (int l = 0; l < d; ++l) {
      ScalarField w = shifted(G[l], l, -1);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (w[i] + G[l][i]);
      W.push_back(std::move(w));
    }
    ScalarField f(g), fs(g);
    for (int j = 0; j < d; ++j) {
      std::fill(f.values().begin(), f.values().end(), 0.0);
      for (int l = 0; l < d; ++l) {
        if (l == j) continue;
        const auto& ajl = a_.entry(j, l);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += ajl[i] * W[static_cast<std::size_t>(l)][i];
      }
      shift_into(f, j, +1, fs);
      auto& o = out[j];
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += 0.5 * (f[i] + fs[i]);
    }
    return out;
  }

  /// A u = -div(flux(grad u)).
  ScalarField apply(const ScalarField& u) const {
    ScalarField r = discrete_divergence(flux(discrete_gradient(u)));
    r *= -1.0;
    return r;
  }

  /// Mean of the symmetric part of a, used by the preconditioner.
  Eigen::MatrixXd mean_symmetric() const {
    const Eigen::MatrixXd m = a_.mean_matrix();
    return 0.5 * (m + m.transpose());
  }

 private:
  CoefficientField a_;
  bool diagonal_;
  bool symmetric_;
  std::vector<ScalarField> face_diag_;
};

/// a applied to a face field (convenience wrapper).
inline VectorField flux(const CoefficientField& a, const VectorField& G) { return DivFormOperator(a).flux(G); }

/// Face field a e_i, the right-hand side of the corrector equation.
inline VectorField flux_of_unit(const DivFormOperator& op, int i) {
  VectorField e(op.grid());
  std::fill(e[i].values().begin(), e[i].values().end(), 1.0);
  return op.flux(e);
}

namespace detail {

struct KrylovProblem {
  const DivFormOperator& op;
  double mass = 0.0;  // 1/T for the massive problem
  std::vector<double> precond_diag;  // diagonal of the mean symmetric part
  bool precondition = true;

  ScalarField apply(const ScalarField& u) const {
    ScalarField r = op.apply(u);
    if (mass != 0.0)
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += mass * u[i];
    return r;
  }

  ScalarField precond(const ScalarField& r) const {
    const TorusGrid& g = r.grid();
    if (!precondition) {
      ScalarField z = r;
      if (mass == 0.0) subtract_mean(z);
      return z;
    }
    const double m0 = mass != 0.0 ? 1.0 / mass : 0.0;
    return fourier_multiplier_apply(
        r,
        [&](const Frequency& f) {
          double s = mass;
          for (int j = 0; j < g.dim(); ++j) s += precond_diag[static_cast<std::size_t>(j)] * std::norm(forward_symbol(g, f, j));
          return Complex(1.0 / s, 0.0);
        },
        Complex(m0, 0.0));
  }
};

inline int effective_max_iter(const SolveOptions& o, const TorusGrid& g) { return o.max_iter > 0 ? o.max_iter : 10 * g.side(); }

inline SolveResult run_cg(const KrylovProblem& prob, const ScalarField& b, const SolveOptions& opts) {
  const TorusGrid& g = b.grid();
  const double bnorm = norm(b);
  SolveResult res{ScalarField(g), 1.0, 0, "pcg", {}, {}};
  ScalarField x(g);
  ScalarField r = b;
  ScalarField z = prob.precond(r);
  ScalarField p = z;
  double rz = dot(r, z);
  const double rz0 = rz;
  double best = 1.0;
  ScalarField best_x = x;
  const int maxit = effective_max_iter(opts, g);
  for (int it = 1; it <= maxit; ++it) {
    const ScalarField Ap = prob.apply(p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      res.u = best_x;
      res.residual = best;
      res.iters = it - 1;
      throw SolveError(ErrorKind::IllConditioned, "non-positive curvature p.Ap = " + std::to_string(pAp) + " at iteration " + std::to_string(it), res);
    }
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rel = norm(r) / bnorm;
    res.residual_history.push_back(rel);
    res.iters = it;
    if (opts.on_iteration) opts.on_iteration(it, rel);
    if (rel < best) {
      best = rel;
      best_x = x;
    }
    if (rel <= opts.tol) break;
    z = prob.precond(r);
    const double rz_new = dot(r, z);
    res.preconditioned_history.push_back(std::sqrt(std::max(rz_new, 0.0) / rz0));
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  res.u = best_x;
  res.residual = best;
  return res;
}

inline SolveResult run_bicgstab(const KrylovProblem& prob, const ScalarField& b, const SolveOptions& opts) {
  const TorusGrid& g = b.grid();
  const double bnorm = norm(b);
  SolveResult res{ScalarField(g), 1.0, 0, "bicgstab", {}, {}};
  ScalarField x(g);
  ScalarField r = b;
  const ScalarField rhat = b;
  ScalarField p(g), v(g);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double best = 1.0;
  ScalarField best_x = x;
  const int maxit = effective_max_iter(opts, g);
  auto breakdown = [&](const std::string& what) {
    res.u = best_x;
    res.residual = best;
    throw SolveError(ErrorKind::NoConvergence, "BiCGStab breakdown: " + what, res);
  };
  for (int it = 1; it <= maxit; ++it) {
    const double rho_new = dot(rhat, r);
    if (rho_new == 0.0) breakdown("rho = 0");
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    const ScalarField y = prob.precond(p);
    v = prob.apply(y);
    const double rv = dot(rhat, v);
    if (rv == 0.0) breakdown("rhat . v = 0");
    alpha = rho / rv;
    ScalarField s = r;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= alpha * v[i];
    res.iters = it;
    if (norm(s) / bnorm <= opts.tol) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * y[i];
      const double rel = norm(s) / bnorm;
      res.residual_history.push_back(rel);
      if (opts.on_iteration) opts.on_iteration(it, rel);
      best = rel;
      best_x = x;
      break;
    }
    const ScalarField zz = prob.precond(s);
    const ScalarField t = prob.apply(zz);
    const double tt = dot(t, t);
    if (tt == 0.0) breakdown("t . t = 0");
    omega = dot(t, s) / tt;
    if (omega == 0.0) breakdown("omega = 0");
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * y[i] + omega * zz[i];
      r[i] = s[i] - omega * t[i];
    }
    const double rel = norm(r) / bnorm;
    res.residual_history.push_back(rel);
    if (opts.on_iteration) opts.on_iteration(it, rel);
    if (rel < best) {
      best = rel;
      best_x = x;
    }
    if (rel <= opts.tol) break;
  }
  res.u = best_x;
  res.residual = best;
  return res;
}

inline SolveResult solve_general(const DivFormOperator& op, const VectorField& g, double mass, const SolveOptions& opts) {
  validate(opts);
  require_same_grid(op.grid(), g.grid(), "solve");
  const TorusGrid& grid = op.grid();
  ScalarField b = discrete_divergence(g);
  // The divergence of a periodic field has zero mean; remove rounding residue.
  if (mass == 0.0) subtract_mean(b);
  const double bnorm = norm(b);
  const double scale = norm(g) * 2.0 * std::sqrt(static_cast<double>(grid.dim())) / grid.spacing();
  if (bnorm == 0.0 || bnorm <= 1e-15 * scale) {
    SolveResult z{ScalarField(grid), 0.0, 0, "none", {}, {}};
    return z;
  }
  KrylovProblem prob{op, mass, {}, opts.precondition};
  const Eigen::MatrixXd ms = op.mean_symmetric();
  for (int j = 0; j < grid.dim(); ++j) prob.precond_diag.push_back(ms(j, j));
  KrylovMethod method = opts.method;
  if (method == KrylovMethod::Auto) method = op.symmetric() ? KrylovMethod::CG : KrylovMethod::BiCGStab;
  auto run = [&](const ScalarField& rhs, const SolveOptions& o) {
    return (method == KrylovMethod::CG) ? run_cg(prob, rhs, o) : run_bicgstab(prob, rhs, o);
  };
  SolveResult res{ScalarField(grid), 1.0, 0, method == KrylovMethod::CG ? "pcg" : "bicgstab", {}, {}};
  // Recursive residuals drift from the true residual by rounding; a short
  // refinement on the true residual restores |b - A u| <= tol |b|.
  for (int pass = 0; pass < 4; ++pass) {
    ScalarField r = prob.apply(res.u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    if (mass == 0.0) subtract_mean(r);
    const double rnorm = norm(r);
    res.residual = rnorm / bnorm;
    if (res.residual <= opts.tol) break;
    SolveOptions sub = opts;
    sub.tol = std::min(0.5, opts.tol * bnorm / rnorm);
    sub.max_iter = effective_max_iter(opts, grid) - res.iters;
    if (sub.max_iter <= 0) break;
    const double s = rnorm / bnorm;
    auto merge = [&](const SolveResult& part) {
      res.u += part.u;
      res.iters += part.iters;
      for (double v : part.residual_history) res.residual_history.push_back(v * s);
      for (double v : part.preconditioned_history) res.preconditioned_history.push_back(v * s);
    };
    try {
      merge(run(r, sub));
    } catch (const SolveError& e) {
      merge(e.best());
      if (mass == 0.0) subtract_mean(res.u);
      throw SolveError(e.kind(), e.message(), res);
    }
  }
  if (mass == 0.0) subtract_mean(res.u);
  if (!all_finite(res.u)) throw SolveError(ErrorKind::IllConditioned, "solution contains non-finite values", res);
  if (res.residual > opts.tol) {
    throw SolveError(ErrorKind::NoConvergence,
                     "relative residual " + std::to_string(res.residual) + " after " + std::to_string(res.iters) + " iterations", res);
  }
  return res;
}

}  // namespace detail

/// Mean-zero u with -div(a grad u) = div g in the summation-by-parts sense.
inline SolveResult solve_divform(const DivFormOperator& op, const VectorField& g, const SolveOptions& opts = {}) {
  return detail::solve_general(op, g, 0.0, opts);
}

inline SolveResult solve_divform(const CoefficientField& a, const VectorField& g, const SolveOptions& opts = {}) {
  return solve_divform(DivFormOperator(a), g, opts);
}

/// u/T - div(a grad u) = div g.
inline SolveResult solve_massive(const DivFormOperator& op, const VectorField& g, double T, const SolveOptions& opts = {}) {
  if (!(T > 0.0) || !std::isfinite(T)) fail(ErrorKind::InvalidSpec, "T must be positive and finite");
  return detail::solve_general(op, g, 1.0 / T, opts);
}

inline SolveResult solve_massive(const CoefficientField& a, const VectorField& g, double T, const SolveOptions& opts = {}) {
  return solve_massive(DivFormOperator(a), g, T, opts);
}

/// Mean-zero u with -Delta_h u = rhs - mean(rhs). The removed mean is written
/// to *projected_mean when requested.
inline ScalarField solve_poisson(const ScalarField& rhs, double* projected_mean = nullptr) {
  const TorusGrid& g = rhs.grid();
  if (projected_mean != nullptr) *projected_mean = mean(rhs);
  return fourier_multiplier_apply(
      rhs, [&](const Frequency& f) { return Complex(1.0 / laplacian_symbol(g, f), 0.0); }, Complex(0.0, 0.0));
}

/// Relative weak residual |div(a grad u + g)| / |div g|.
inline double divform_residual(const DivFormOperator& op, const ScalarField& u, const VectorField& g) {
  VectorField F = op.flux(discrete_gradient(u));
  F += g;
  const double den = norm(discrete_divergence(g));
  return den > 0.0 ? norm(discrete_divergence(F)) / den : norm(discrete_divergence(F));
}

}  // namespace homoglab
