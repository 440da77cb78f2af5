#pragma once

// Real-to-complex transforms on the torus (FFTW backend) and Fourier
// multipliers expressed through lattice symbols.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "homoglab/lattice.hpp"

namespace homoglab {

using Complex = std::complex<double>;

namespace detail {

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

inline std::vector<int> fft_dims(const TorusGrid& g) { return std::vector<int>(static_cast<std::size_t>(g.dim()), g.side()); }

inline std::size_t half_size(const TorusGrid& g) {
  return g.size() / static_cast<std::size_t>(g.side()) * static_cast<std::size_t>(g.side() / 2 + 1);
}

// Planning is not thread safe in FFTW; execution with the new-array interface is.
inline const FftPlans& plans_for(const TorusGrid& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(g.dim(), g.side());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const auto dims = fft_dims(g);
  double* real = fftw_alloc_real(g.size());
  fftw_complex* cplx = fftw_alloc_complex(half_size(g));
  FftPlans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c(g.dim(), dims.data(), real, cplx, flags);
  p.backward = fftw_plan_dft_c2r(g.dim(), dims.data(), cplx, real, flags);
  fftw_free(real);
  fftw_free(cplx);
  if (p.forward == nullptr || p.backward == nullptr) fail(ErrorKind::InvalidSize, "FFTW planning failed");
  return cache.emplace(key, p).first->second;
}

}  // namespace detail

/// Half spectrum of a real field: full range on the first d-1 axes,
/// n = 0..L/2 on the last axis. Unnormalized forward transform.
class Spectrum {
 public:
  explicit Spectrum(const TorusGrid& grid) : grid_(grid), data_(detail::half_size(grid)) {}

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return data_.size(); }
  Complex& operator[](std::size_t i) noexcept { return data_[i]; }
  const Complex& operator[](std::size_t i) const noexcept { return data_[i]; }
  Complex* data() noexcept { return data_.data(); }
  const Complex* data() const noexcept { return data_.data(); }

 private:
  TorusGrid grid_;
  std::vector<Complex> data_;
};

inline Spectrum forward_fft(const ScalarField& u) {
  Spectrum s(u.grid());
  const auto& p = detail::plans_for(u.grid());
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(u.data()), reinterpret_cast<fftw_complex*>(s.data()));
  return s;
}

/// Inverse transform including the 1/N normalization. The spectrum is copied
/// because c2r transforms overwrite their input.
inline ScalarField inverse_fft(const Spectrum& s) {
  Spectrum work = s;
  ScalarField u(s.grid());
  const auto& p = detail::plans_for(s.grid());
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(work.data()), u.data());
  u *= 1.0 / static_cast<double>(u.size());
  return u;
}

/// A lattice frequency: signed integer index n (|n_j| <= L/2) and the physical
/// wavevector k = 2 pi n / (L h).
struct Frequency {
  Coord n{0, 0, 0};
  std::array<double, 3> k{0.0, 0.0, 0.0};
  bool is_zero() const noexcept { return n[0] == 0 && n[1] == 0 && n[2] == 0; }
};

/// Visit every entry of the half spectrum as f(index, frequency, multiplicity),
/// where multiplicity counts the conjugate partner that is not stored.
template <class F>
void for_each_frequency(const TorusGrid& g, F&& f) {
  const int d = g.dim();
  const int L = g.side();
  const int Lh = L / 2 + 1;
  const double scale = 2.0 * std::numbers::pi / g.period();
  Coord idx{0, 0, 0};
  std::size_t total = detail::half_size(g);
  for (std::size_t lin = 0; lin < total; ++lin) {
    Frequency fr;
    for (int a = 0; a < d; ++a) {
      int n = idx[a];
      if (a < d - 1 && n > L / 2) n -= L;
      fr.n[a] = n;
      fr.k[a] = scale * n;
    }
    const int last = idx[d - 1];
    const double mult = (last == 0 || last == L / 2) ? 1.0 : 2.0;
    f(lin, static_cast<const Frequency&>(fr), mult);
    for (int a = d - 1; a >= 0; --a) {
      const int ext = (a == d - 1) ? Lh : L;
      if (++idx[a] < ext) break;
      idx[a] = 0;
    }
  }
}

// --- lattice symbols ----------------------------------------------------------

/// |k|_h^2 = (4/h^2) sum_j sin^2(pi n_j / L), the symbol of -Delta_h.
inline double laplacian_symbol(const TorusGrid& g, const Frequency& f) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double t = std::sin(std::numbers::pi * f.n[a] / g.side());
    s += t * t;
  }
  return 4.0 * s / (g.spacing() * g.spacing());
}

/// Symbol of the forward difference along an axis: (e^{i k h} - 1)/h.
inline Complex forward_symbol(const TorusGrid& g, const Frequency& f, int axis) {
  const double th = 2.0 * std::numbers::pi * f.n[axis] / g.side();
  return Complex(std::cos(th) - 1.0, std::sin(th)) / g.spacing();
}

/// Symbol of the backward difference along an axis: (1 - e^{-i k h})/h.
inline Complex backward_symbol(const TorusGrid& g, const Frequency& f, int axis) {
  const double th = 2.0 * std::numbers::pi * f.n[axis] / g.side();
  return Complex(1.0 - std::cos(th), std::sin(th)) / g.spacing();
}

/// Apply an already-transformed multiplier in place, with explicit k = 0 value.
template <class M>
void multiply_spectrum(Spectrum& s, M&& m, Complex m0) {
  const TorusGrid& g = s.grid();
  for_each_frequency(g, [&](std::size_t i, const Frequency& f, double) {
    if (f.is_zero()) {
      s[i] *= m0;
      return;
    }
    const Complex v = m(f);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      fail(ErrorKind::SymbolSingular, "multiplier is not finite at a nonzero lattice frequency");
    }
    s[i] *= v;
  });
}

/// inverse-transform(m(k) * transform(u)); m(0) is supplied explicitly by the caller.
/// Only the stored half spectrum is evaluated, so m must be Hermitian compatible
/// (m(-k) = conj m(k)) for the result to be the real part of the full product.
template <class M>
ScalarField fourier_multiplier_apply(const ScalarField& u, M&& m, Complex m0) {
  Spectrum s = forward_fft(u);
  multiply_spectrum(s, std::forward<M>(m), m0);
  return inverse_fft(s);
}

}  // namespace homoglab
