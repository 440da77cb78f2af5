#pragma once

// Random media: Gaussian fields with prescribed correlation decay, their
// Lipschitz transforms into admissible coefficients, and Poisson inclusions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "homoglab/error.hpp"
#include "homoglab/fft.hpp"
#include "homoglab/lattice.hpp"
#include "homoglab/rng.hpp"

namespace homoglab {

// --- coefficient fields -------------------------------------------------------

/// Per-cell d x d matrix a(x). Entry (j, l) is stored as a contiguous array over
/// cells so that face averages are simple array passes.
class CoefficientField {
 public:
  explicit CoefficientField(const TorusGrid& grid)
      : grid_(grid), entries_(static_cast<std::size_t>(grid.dim() * grid.dim()), ScalarField(grid)) {}

  static CoefficientField isotropic(const ScalarField& alpha) {
    CoefficientField a(alpha.grid());
    for (int j = 0; j < a.dim(); ++j) a.entry(j, j) = alpha;
    return a;
  }

  static CoefficientField constant(const TorusGrid& grid, const Eigen::MatrixXd& m) {
    if (m.rows() != grid.dim() || m.cols() != grid.dim()) fail(ErrorKind::InvalidSpec, "matrix size does not match dimension");
    CoefficientField a(grid);
    for (int j = 0; j < a.dim(); ++j)
      for (int l = 0; l < a.dim(); ++l) std::fill(a.entry(j, l).values().begin(), a.entry(j, l).values().end(), m(j, l));
    return a;
  }

  const TorusGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }

  ScalarField& entry(int j, int l) noexcept { return entries_[static_cast<std::size_t>(j * dim() + l)]; }
  const ScalarField& entry(int j, int l) const noexcept { return entries_[static_cast<std::size_t>(j * dim() + l)]; }

  double operator()(std::size_t cell, int j, int l) const noexcept { return entry(j, l)[cell]; }

  Eigen::MatrixXd matrix(std::size_t cell) const {
    Eigen::MatrixXd m(dim(), dim());
    for (int j = 0; j < dim(); ++j)
      for (int l = 0; l < dim(); ++l) m(j, l) = entry(j, l)[cell];
    return m;
  }

  void set_matrix(std::size_t cell, const Eigen::MatrixXd& m) {
    for (int j = 0; j < dim(); ++j)
      for (int l = 0; l < dim(); ++l) entry(j, l)[cell] = m(j, l);
  }

  bool is_diagonal() const {
    for (int j = 0; j < dim(); ++j)
      for (int l = 0; l < dim(); ++l)
        if (j != l && max_abs(entry(j, l)) != 0.0) return false;
    return true;
  }

  bool is_symmetric() const {
    for (int j = 0; j < dim(); ++j)
      for (int l = j + 1; l < dim(); ++l) {
        const auto& a = entry(j, l);
        const auto& b = entry(l, j);
        for (std::size_t i = 0; i < a.size(); ++i)
          if (a[i] != b[i]) return false;
      }
    return true;
  }

  /// Spatial mean of the matrix field.
  Eigen::MatrixXd mean_matrix() const {
    Eigen::MatrixXd m(dim(), dim());
    for (int j = 0; j < dim(); ++j)
      for (int l = 0; l < dim(); ++l) m(j, l) = homoglab::mean(entry(j, l));
    return m;
  }

  /// Ellipticity constant declared by the generator (0 when unknown).
  double lambda() const noexcept { return lambda_; }
  void set_lambda(double lambda) noexcept { lambda_ = lambda; }

 private:
  TorusGrid grid_;
  std::vector<ScalarField> entries_;
  double lambda_ = 0.0;
};

struct AdmissibilityReport {
  bool ok = true;
  double max_operator_norm = 0.0;
  double min_symmetric_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t violating_cells = 0;
};

inline double operator_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline double min_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Pointwise check of |a(x) xi| <= |xi| and xi . a(x) xi >= lambda |xi|^2 on every cell.
inline AdmissibilityReport check_admissibility(const CoefficientField& a, double lambda, double slack = 1e-12) {
  AdmissibilityReport rep;
  const bool diag = a.is_diagonal();
  for (std::size_t c = 0; c < a.grid().size(); ++c) {
    double opn = 0.0, mineig = 0.0;
    if (diag) {
      mineig = std::numeric_limits<double>::infinity();
      for (int j = 0; j < a.dim(); ++j) {
        opn = std::max(opn, std::abs(a(c, j, j)));
        mineig = std::min(mineig, a(c, j, j));
      }
    } else {
      const Eigen::MatrixXd m = a.matrix(c);
      opn = operator_norm(m);
      mineig = min_symmetric_eigenvalue(m);
    }
    rep.max_operator_norm = std::max(rep.max_operator_norm, opn);
    rep.min_symmetric_eigenvalue = std::min(rep.min_symmetric_eigenvalue, mineig);
    if (opn > 1.0 + slack || mineig < lambda - slack) ++rep.violating_cells;
  }
  rep.ok = rep.violating_cells == 0;
  return rep;
}

// --- Gaussian fields ------------------------------------------------------------

enum class SpectrumKind { PowerLaw, LorentzianCovariance, WhiteNoise };

struct SpectrumSpec {
  SpectrumKind kind = SpectrumKind::PowerLaw;
  double beta = 1.0;
  /// Variance of the synthesized field (0 gives the zero field).
  double amplitude = 1.0;
};

inline void validate(const SpectrumSpec& s, int d) {
  if (!(s.amplitude >= 0.0) || !std::isfinite(s.amplitude)) fail(ErrorKind::InvalidSpec, "amplitude must be finite and >= 0");
  if (s.kind == SpectrumKind::PowerLaw && !(s.beta > 0.0 && s.beta < d)) {
    fail(ErrorKind::InvalidSpec, "PowerLaw requires 0 < beta < d");
  }
}

/// Discrete spectrum c_h(k) on the half spectrum, normalized so that
/// sum_{k != 0} c_h(k) / (L h)^d equals the amplitude. Entry at k = 0 is 0.
inline std::vector<double> discrete_spectrum(const SpectrumSpec& spec, const TorusGrid& g) {
  validate(spec, g.dim());
  const int d = g.dim();
  std::vector<double> c(detail::half_size(g), 0.0);
  switch (spec.kind) {
    case SpectrumKind::PowerLaw:
      for_each_frequency(g, [&](std::size_t i, const Frequency& f, double) {
        if (!f.is_zero()) c[i] = std::pow(laplacian_symbol(g, f), 0.5 * (spec.beta - d));
      });
      break;
    case SpectrumKind::WhiteNoise:
      for_each_frequency(g, [&](std::size_t i, const Frequency& f, double) {
        if (!f.is_zero()) c[i] = 1.0;
      });
      break;
    case SpectrumKind::LorentzianCovariance: {
      ScalarField cov(g);
      for (std::size_t x = 0; x < g.size(); ++x) {
        const double r = g.distance_to_origin(g.coords(x));
        cov[x] = 1.0 / (1.0 + r * r);
      }
      const Spectrum s = forward_fft(cov);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::max(0.0, s[i].real());
      c[0] = 0.0;
      break;
    }
  }
  double total = 0.0;
  for_each_frequency(g, [&](std::size_t i, const Frequency&, double mult) { total += mult * c[i]; });
  total /= g.volume();
  const double scale = (total > 0.0) ? spec.amplitude / total : 0.0;
  for (double& v : c) v *= scale;
  return c;
}

/// Count of negative ripples clipped in the Lorentzian spectrum (diagnostic).
inline std::size_t lorentzian_negative_modes(const TorusGrid& g) {
  ScalarField cov(g);
  for (std::size_t x = 0; x < g.size(); ++x) {
    const double r = g.distance_to_origin(g.coords(x));
    cov[x] = 1.0 / (1.0 + r * r);
  }
  const Spectrum s = forward_fft(cov);
  std::size_t n = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i].real() < 0.0) ++n;
  return n;
}

/// Real white noise W(x) ~ N(0,1) per cell.
inline ScalarField white_noise(const TorusGrid& g, std::uint64_t seed, std::uint32_t sample = 0) {
  PhiloxStream rng(seed, sample, Purpose::GaussianNoise);
  ScalarField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = rng.normal();
  return w;
}

/// Colour a white-noise field with a discrete spectrum: omega = IFFT(sqrt(c_h / h^d) FFT(W)).
inline ScalarField colour_noise(const ScalarField& w, const std::vector<double>& chat) {
  const TorusGrid& g = w.grid();
  Spectrum s = forward_fft(w);
  const double inv_cell = 1.0 / g.cell_volume();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::sqrt(chat[i] * inv_cell);
  s[0] = 0.0;
  ScalarField u = inverse_fft(s);
  subtract_mean(u);
  return u;
}

inline ScalarField sample_gaussian_field(const SpectrumSpec& spec, const TorusGrid& g, std::uint64_t seed) {
  const auto chat = discrete_spectrum(spec, g);
  return colour_noise(white_noise(g, seed), chat);
}

struct CovarianceEstimate {
  Coord lag{0, 0, 0};
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Empirical covariance at the given lags: spatial average per sample (via the
/// periodic autocorrelation), then mean and standard error across samples.
inline std::vector<CovarianceEstimate> covariance_estimate(std::span<const ScalarField> samples, std::span<const Coord> lags) {
  if (samples.size() < 2) fail(ErrorKind::InvalidSpec, "covariance_estimate needs at least 2 samples");
  const TorusGrid& g = samples[0].grid();
  for (const auto& s : samples) require_same_grid(g, s.grid(), "covariance_estimate");
  std::vector<std::vector<double>> per(lags.size());
  for (const auto& s : samples) {
    ScalarField centred = s;
    subtract_mean(centred);
    Spectrum sp = forward_fft(centred);
    for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = std::norm(sp[i]);
    const ScalarField ac = inverse_fft(sp);
    for (std::size_t l = 0; l < lags.size(); ++l) per[l].push_back(ac[g.index(lags[l])] / static_cast<double>(g.size()));
  }
  std::vector<CovarianceEstimate> out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t l = 0; l < lags.size(); ++l) {
    double m = 0.0;
    for (double v : per[l]) m += v;
    m /= n;
    double var = 0.0;
    for (double v : per[l]) var += (v - m) * (v - m);
    var /= (n - 1.0);
    out.push_back({lags[l], m, std::sqrt(var / n)});
  }
  return out;
}

// --- transforms -------------------------------------------------------------------

enum class TransformShape { Clamp, Tanh };

struct TransformSpec {
  double lambda = 0.5;
  double contrast = 0.0;
  TransformShape shape = TransformShape::Clamp;
};

inline void validate(const TransformSpec& t) {
  if (!(t.lambda > 0.0 && t.lambda <= 1.0)) fail(ErrorKind::InvalidSpec, "lambda must lie in (0, 1]");
  if (!(t.contrast >= 0.0) || !std::isfinite(t.contrast)) fail(ErrorKind::InvalidSpec, "contrast must be finite and >= 0");
}

/// Scalar value of the transform at a Gaussian value w.
inline double lipschitz_value(double w, const TransformSpec& t) {
  const double x = t.contrast * w;
  const double s = (t.shape == TransformShape::Clamp) ? std::clamp(x, -1.0, 1.0) : std::tanh(x);
  return 0.5 * (1.0 + t.lambda) + 0.5 * (1.0 - t.lambda) * s;
}

/// a(x) = ((1+lambda)/2 + ((1-lambda)/2) s(h omega(x))) Id.
inline CoefficientField lipschitz_transform(const ScalarField& omega, const TransformSpec& t) {
  validate(t);
  ScalarField alpha(omega.grid());
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = lipschitz_value(omega[i], t);
  auto a = CoefficientField::isotropic(alpha);
  a.set_lambda(t.lambda);
  return a;
}

// --- Poisson inclusions -----------------------------------------------------------

struct InclusionSpec {
  double intensity = 0.0;
  double radius = 1.0;
  Eigen::MatrixXd a_in;
  Eigen::MatrixXd a_out;
  double lambda = 0.5;
};

inline void validate(const InclusionSpec& s, const TorusGrid& g) {
  const int d = g.dim();
  if (!(s.intensity >= 0.0) || !std::isfinite(s.intensity)) fail(ErrorKind::InvalidSpec, "intensity must be finite and >= 0");
  if (!(s.radius >= g.spacing())) fail(ErrorKind::InvalidSpec, "inclusion radius must be at least one lattice spacing");
  if (!(s.lambda > 0.0 && s.lambda <= 1.0)) fail(ErrorKind::InvalidSpec, "lambda must lie in (0, 1]");
  for (const auto* m : {&s.a_in, &s.a_out}) {
    if (m->rows() != d || m->cols() != d) fail(ErrorKind::InvalidSpec, "inclusion matrices must be d x d");
    if (operator_norm(*m) > 1.0 + 1e-12) fail(ErrorKind::InvalidSpec, "inclusion matrix violates |a xi| <= |xi|");
    if (min_symmetric_eigenvalue(*m) < s.lambda - 1e-12) fail(ErrorKind::InvalidSpec, "inclusion matrix violates ellipticity");
  }
}

/// Boolean model: Poisson(intensity (L h)^d) centres placed uniformly; a cell
/// whose centre lies within the radius (torus metric) of a centre takes a_in.
inline CoefficientField sample_poisson_inclusions(const InclusionSpec& spec, const TorusGrid& g, std::uint64_t seed) {
  validate(spec, g);
  const int d = g.dim();
  const int L = g.side();
  const double h = g.spacing();
  PhiloxStream rng(seed, 0, Purpose::PoissonPoints);
  const std::uint64_t count = rng.poisson(spec.intensity * g.volume());
  std::vector<char> inside(g.size(), 0);
  const int reach = static_cast<int>(std::ceil(spec.radius / h)) + 1;
  const double r2 = spec.radius * spec.radius;
  for (std::uint64_t p = 0; p < count; ++p) {
    std::array<double, 3> centre{0, 0, 0};
    for (int a = 0; a < d; ++a) centre[a] = rng.uniform() * L;  // in cell units
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = static_cast<int>(std::floor(centre[a])) - reach;
      hi[a] = static_cast<int>(std::floor(centre[a])) + reach;
      // A box wider than the torus would visit cells twice; harmless but wasteful.
      if (hi[a] - lo[a] + 1 > L) {
        lo[a] = 0;
        hi[a] = L - 1;
      }
    }
    Coord c{0, 0, 0};
    for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
      for (c[1] = (d > 1 ? lo[1] : 0); c[1] <= (d > 1 ? hi[1] : 0); ++c[1])
        for (c[2] = (d > 2 ? lo[2] : 0); c[2] <= (d > 2 ? hi[2] : 0); ++c[2]) {
          double dist2 = 0.0;
          for (int a = 0; a < d; ++a) {
            double dx = std::fmod(std::abs(c[a] - centre[a]), static_cast<double>(L));
            dx = std::min(dx, L - dx) * h;
            dist2 += dx * dx;
          }
          if (dist2 <= r2) inside[g.index(c)] = 1;
        }
  }
  CoefficientField a(g);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l) {
      auto& e = a.entry(j, l);
      for (std::size_t i = 0; i < g.size(); ++i) e[i] = inside[i] ? spec.a_in(j, l) : spec.a_out(j, l);
    }
  a.set_lambda(spec.lambda);
  return a;
}

/// Fraction of cells carrying a_in, given the inclusion matrix.
inline double inclusion_volume_fraction(const CoefficientField& a, const Eigen::MatrixXd& a_in) {
  std::size_t n = 0;
  for (std::size_t c = 0; c < a.grid().size(); ++c)
    if ((a.matrix(c) - a_in).cwiseAbs().maxCoeff() == 0.0) ++n;
  return static_cast<double>(n) / static_cast<double>(a.grid().size());
}

}  // namespace homoglab
