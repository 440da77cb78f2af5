#pragma once

// Balls and annuli on the torus, measured with the periodic (minimal image) metric.

#include <array>
#include <cmath>
#include <vector>

#include "homoglab/lattice.hpp"

namespace homoglab {

/// Cell offsets c with |(c + shift) h| <= r (closed ball). The shift, in cell
/// units, places the sample points on faces or corners (e.g. {0.5, 0.5, 0}).
/// Offsets are minimal-image coordinates, meaningful while r < L h / 2.
inline std::vector<Coord> ball_offsets(const TorusGrid& g, double r, std::array<double, 3> shift = {0, 0, 0}) {
  std::vector<Coord> out;
  const int reach = static_cast<int>(std::floor(r / g.spacing())) + 1;
  const int d = g.dim();
  const double r2 = r * r * (1.0 + 1e-14);
  const double h2 = g.spacing() * g.spacing();
  for (int a = -reach; a <= reach; ++a)
    for (int b = (d > 1 ? -reach : 0); b <= (d > 1 ? reach : 0); ++b)
      for (int c = (d > 2 ? -reach : 0); c <= (d > 2 ? reach : 0); ++c) {
        const double x = a + shift[0], y = (d > 1 ? b + shift[1] : 0.0), z = (d > 2 ? c + shift[2] : 0.0);
        if ((x * x + y * y + z * z) * h2 <= r2) out.push_back({a, b, c});
      }
  return out;
}

/// Cell offsets with R < |c h| < 2R (open annulus).
inline std::vector<Coord> annulus_offsets(const TorusGrid& g, double R) {
  std::vector<Coord> out;
  const int reach = static_cast<int>(std::ceil(2.0 * R / g.spacing()));
  const int d = g.dim();
  const double h2 = g.spacing() * g.spacing();
  for (int a = -reach; a <= reach; ++a)
    for (int b = (d > 1 ? -reach : 0); b <= (d > 1 ? reach : 0); ++b)
      for (int c = (d > 2 ? -reach : 0); c <= (d > 2 ? reach : 0); ++c) {
        const double q = std::sqrt(static_cast<double>(a * a + b * b + c * c) * h2);
        if (q > R && q < 2.0 * R) out.push_back({a, b, c});
      }
  return out;
}

/// Indicator of centre + offsets, normalized to unit sum when normalize is set.
inline ScalarField indicator(const TorusGrid& g, const Coord& centre, const std::vector<Coord>& offsets, bool normalize) {
  ScalarField f(g);
  const double v = normalize ? 1.0 / static_cast<double>(offsets.size()) : 1.0;
  for (const auto& o : offsets) f.at({centre[0] + o[0], centre[1] + o[1], centre[2] + o[2]}) = v;
  return f;
}

/// Average of u over centre + offsets.
inline double average_over(const ScalarField& u, const Coord& centre, const std::vector<Coord>& offsets) {
  double s = 0.0;
  for (const auto& o : offsets) s += u.at({centre[0] + o[0], centre[1] + o[1], centre[2] + o[2]});
  return s / static_cast<double>(offsets.size());
}

}  // namespace homoglab
