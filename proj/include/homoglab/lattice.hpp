#pragma once

// Periodic lattice geometry, lattice fields and the staggered difference
// operators shared by every other module.
//
// Layout: scalars live at cell centres, component j of a vector field lives on
// the face between x and x + h e_j. Arrays are row-major with the last axis
// varying fastest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "homoglab/error.hpp"

namespace homoglab {

using Coord = std::array<int, 3>;

class TorusGrid {
 public:
  static constexpr int kMaxDim = 3;
  static constexpr std::size_t kMaxCells = std::size_t{1} << 30;

  /// Validated construction (d in {1,2,3}, L a power of two >= 4, h > 0).
  static TorusGrid make(int d, int L, double h = 1.0) {
    if (d < 1 || d > kMaxDim) {
      fail(ErrorKind::InvalidDimension, "dimension must be 1, 2 or 3, got " + std::to_string(d));
    }
    if (L < 4 || (L & (L - 1)) != 0) {
      fail(ErrorKind::InvalidSize, "side length must be a power of two >= 4, got " + std::to_string(L));
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
      fail(ErrorKind::InvalidSize, "lattice spacing must be positive and finite");
    }
    std::size_t cells = 1;
    for (int a = 0; a < d; ++a) {
      if (cells > kMaxCells / static_cast<std::size_t>(L)) {
        fail(ErrorKind::InvalidSize, "L^d exceeds the addressable cell budget");
      }
      cells *= static_cast<std::size_t>(L);
    }
    return TorusGrid(d, L, h, cells);
  }

  int dim() const noexcept { return d_; }
  int side() const noexcept { return L_; }
  double spacing() const noexcept { return h_; }
  double period() const noexcept { return L_ * h_; }
  std::size_t size() const noexcept { return cells_; }
  double cell_volume() const noexcept { return std::pow(h_, d_); }
  double volume() const noexcept { return std::pow(period(), d_); }

  std::size_t stride(int axis) const noexcept {
    std::size_t s = 1;
    for (int a = d_ - 1; a > axis; --a) s *= static_cast<std::size_t>(L_);
    return s;
  }

  Coord coords(std::size_t idx) const noexcept {
    Coord c{0, 0, 0};
    for (int a = d_ - 1; a >= 0; --a) {
      c[a] = static_cast<int>(idx % static_cast<std::size_t>(L_));
      idx /= static_cast<std::size_t>(L_);
    }
    return c;
  }

  int wrap(int n) const noexcept {
    int m = n % L_;
    return m < 0 ? m + L_ : m;
  }

  /// Minimal-image representative of a coordinate difference, in (-L/2, L/2].
  int minimal_image(int n) const noexcept {
    int m = wrap(n);
    return m > L_ / 2 ? m - L_ : m;
  }

  std::size_t index(const Coord& c) const noexcept {
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) idx = idx * static_cast<std::size_t>(L_) + static_cast<std::size_t>(wrap(c[a]));
    return idx;
  }

  std::size_t neighbor(std::size_t idx, int axis, int offset) const noexcept {
    Coord c = coords(idx);
    c[axis] += offset;
    return index(c);
  }

  /// Torus distance between the points c + offset and the origin, in length units.
  double distance_to_origin(const Coord& c, std::array<double, 3> offset = {0, 0, 0}) const noexcept {
    double r2 = 0.0;
    for (int a = 0; a < d_; ++a) {
      double x = static_cast<double>(minimal_image(c[a])) + offset[a];
      // Half-cell offsets can push the representative past L/2.
      if (x > 0.5 * L_) x -= L_;
      if (x < -0.5 * L_) x += L_;
      r2 += x * x;
    }
    return std::sqrt(r2) * h_;
  }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.d_ == b.d_ && a.L_ == b.L_ && a.h_ == b.h_;
  }

 private:
  TorusGrid(int d, int L, double h, std::size_t cells) : d_(d), L_(L), h_(h), cells_(cells) {}

  int d_ = 0;
  int L_ = 0;
  double h_ = 1.0;
  std::size_t cells_ = 0;
};

inline void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) fail(ErrorKind::MismatchedGrids, std::string(what) + ": fields live on different grids");
}

class ScalarField {
 public:
  explicit ScalarField(const TorusGrid& grid, double value = 0.0) : grid_(grid), data_(grid.size(), value) {}
  ScalarField(const TorusGrid& grid, std::vector<double> values) : grid_(grid), data_(std::move(values)) {
    if (data_.size() != grid_.size()) fail(ErrorKind::InvalidSize, "value count does not match grid");
  }

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(const Coord& c) noexcept { return data_[grid_.index(c)]; }
  double at(const Coord& c) const noexcept { return data_[grid_.index(c)]; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  ScalarField& operator+=(const ScalarField& o) {
    require_same_grid(grid_, o.grid_, "ScalarField +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    require_same_grid(grid_, o.grid_, "ScalarField -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ScalarField& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }
  ScalarField& operator+=(double s) noexcept {
    for (double& v : data_) v += s;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  TorusGrid grid_;
  std::vector<double> data_;
};

class VectorField {
 public:
  explicit VectorField(const TorusGrid& grid, double value = 0.0)
      : grid_(grid), comps_(static_cast<std::size_t>(grid.dim()), ScalarField(grid, value)) {}

  const TorusGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  ScalarField& operator[](int j) noexcept { return comps_[static_cast<std::size_t>(j)]; }
  const ScalarField& operator[](int j) const noexcept { return comps_[static_cast<std::size_t>(j)]; }

  /// Constant field with the given components.
  static VectorField constant(const TorusGrid& grid, std::span<const double> v) {
    VectorField f(grid);
    for (int j = 0; j < grid.dim(); ++j) std::fill(f[j].values().begin(), f[j].values().end(), v[j]);
    return f;
  }

  VectorField& operator+=(const VectorField& o) {
    for (int j = 0; j < dim(); ++j) (*this)[j] += o[j];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int j = 0; j < dim(); ++j) (*this)[j] -= o[j];
    return *this;
  }
  VectorField& operator*=(double s) noexcept {
    for (auto& c : comps_) c *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }

 private:
  TorusGrid grid_;
  std::vector<ScalarField> comps_;
};

// --- reductions -------------------------------------------------------------

inline double sum(const ScalarField& u) {
  return std::accumulate(u.values().begin(), u.values().end(), 0.0);
}

inline double mean(const ScalarField& u) { return sum(u) / static_cast<double>(u.size()); }

inline double dot(const ScalarField& u, const ScalarField& v) {
  require_same_grid(u.grid(), v.grid(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double dot(const VectorField& F, const VectorField& G) {
  double s = 0.0;
  for (int j = 0; j < F.dim(); ++j) s += dot(F[j], G[j]);
  return s;
}

/// Euclidean norm of the value array (no volume factor).
inline double norm(const ScalarField& u) { return std::sqrt(dot(u, u)); }
inline double norm(const VectorField& F) { return std::sqrt(dot(F, F)); }

/// L^2 norm on the torus, i.e. with the cell volume h^d.
inline double l2_norm(const ScalarField& u) { return norm(u) * std::sqrt(u.grid().cell_volume()); }
inline double l2_norm(const VectorField& F) { return norm(F) * std::sqrt(F.grid().cell_volume()); }

inline double max_abs(const ScalarField& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const VectorField& F) {
  double m = 0.0;
  for (int j = 0; j < F.dim(); ++j) m = std::max(m, max_abs(F[j]));
  return m;
}

inline bool all_finite(const ScalarField& u) {
  return std::all_of(u.values().begin(), u.values().end(), [](double v) { return std::isfinite(v); });
}

inline void subtract_mean(ScalarField& u) { u += -mean(u); }

// --- shifts and differences ---------------------------------------------------

/// out(x) = u(x + offset e_axis), periodic. Works on whole contiguous blocks.
inline void shift_into(const ScalarField& u, int axis, int offset, ScalarField& out) {
  const TorusGrid& g = u.grid();
  const std::size_t L = static_cast<std::size_t>(g.side());
  const std::size_t inner = g.stride(axis);
  const std::size_t block = inner * L;
  const std::size_t outer = g.size() / block;
  const std::size_t s = static_cast<std::size_t>(g.wrap(offset));
  const double* src = u.data();
  double* dst = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* sb = src + o * block;
    double* db = dst + o * block;
    // Destination rows [0, L-s) come from source rows [s, L); the rest wrap around.
    std::memcpy(db, sb + s * inner, (L - s) * inner * sizeof(double));
    std::memcpy(db + (L - s) * inner, sb, s * inner * sizeof(double));
  }
}

inline ScalarField shifted(const ScalarField& u, int axis, int offset) {
  ScalarField out(u.grid());
  shift_into(u, axis, offset, out);
  return out;
}

/// Forward difference (u(x + h e_axis) - u(x)) / h.
inline ScalarField forward_difference(const ScalarField& u, int axis) {
  ScalarField out = shifted(u, axis, +1);
  const double inv_h = 1.0 / u.grid().spacing();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - u[i]) * inv_h;
  return out;
}

/// Backward difference (u(x) - u(x - h e_axis)) / h.
inline ScalarField backward_difference(const ScalarField& u, int axis) {
  ScalarField out = shifted(u, axis, -1);
  const double inv_h = 1.0 / u.grid().spacing();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (u[i] - out[i]) * inv_h;
  return out;
}

/// Forward-difference gradient; component j sits on the face x + h/2 e_j.
inline VectorField discrete_gradient(const ScalarField& u) {
  VectorField F(u.grid());
  for (int j = 0; j < u.grid().dim(); ++j) F[j] = forward_difference(u, j);
  return F;
}

/// Backward-difference divergence, the negative adjoint of discrete_gradient.
inline ScalarField discrete_divergence(const VectorField& F) {
  ScalarField out(F.grid());
  for (int j = 0; j < F.dim(); ++j) out += backward_difference(F[j], j);
  return out;
}

/// Five-point (2d+1-point) Laplacian, equal to divergence of gradient.
inline ScalarField discrete_laplacian(const ScalarField& u) { return discrete_divergence(discrete_gradient(u)); }

}  // namespace homoglab
