#pragma once

// Flat binary container for lattice fields:
//   "HGLF" | u32 version | u32 d | u32 L | f64 h | u32 kind | u32 components | f64 data...
// All integers and floats are little-endian; components are stored one after
// the other, each in row-major cell order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "homoglab/error.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/lattice.hpp"

namespace homoglab {

enum class FieldKind : std::uint32_t { Scalar = 0, Vector = 1, Coefficient = 2 };

struct FieldRecord {
  TorusGrid grid = TorusGrid::make(1, 4);
  FieldKind kind = FieldKind::Scalar;
  std::vector<ScalarField> components;
};

namespace detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::IOError, "truncated field container");
  return to_little(v);
}

}  // namespace detail

inline constexpr std::uint32_t kFieldFormatVersion = 1;

inline void write_record(const std::string& path, const FieldRecord& rec) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::IOError, "cannot open " + path + " for writing");
  os.write("HGLF", 4);
  detail::put<std::uint32_t>(os, kFieldFormatVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.grid.dim()));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.grid.side()));
  detail::put<double>(os, rec.grid.spacing());
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.kind));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.components.size()));
  for (const auto& c : rec.components)
    for (double v : c.values()) detail::put<double>(os, v);
  if (!os) fail(ErrorKind::IOError, "write failed for " + path);
}

inline FieldRecord read_record(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::IOError, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HGLF", 4) != 0) fail(ErrorKind::IOError, path + " is not a field container");
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kFieldFormatVersion) fail(ErrorKind::IOError, "unsupported container version " + std::to_string(version));
  const auto d = detail::get<std::uint32_t>(is);
  const auto L = detail::get<std::uint32_t>(is);
  const auto h = detail::get<double>(is);
  const auto kind = detail::get<std::uint32_t>(is);
  const auto ncomp = detail::get<std::uint32_t>(is);
  if (kind > 2) fail(ErrorKind::IOError, "unknown field kind tag");
  FieldRecord rec;
  rec.grid = TorusGrid::make(static_cast<int>(d), static_cast<int>(L), h);
  rec.kind = static_cast<FieldKind>(kind);
  for (std::uint32_t c = 0; c < ncomp; ++c) {
    ScalarField f(rec.grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = detail::get<double>(is);
    rec.components.push_back(std::move(f));
  }
  return rec;
}

inline FieldRecord to_record(const ScalarField& u) { return {u.grid(), FieldKind::Scalar, {u}}; }

inline FieldRecord to_record(const VectorField& F) {
  FieldRecord r{F.grid(), FieldKind::Vector, {}};
  for (int j = 0; j < F.dim(); ++j) r.components.push_back(F[j]);
  return r;
}

inline FieldRecord to_record(const CoefficientField& a) {
  FieldRecord r{a.grid(), FieldKind::Coefficient, {}};
  for (int j = 0; j < a.dim(); ++j)
    for (int l = 0; l < a.dim(); ++l) r.components.push_back(a.entry(j, l));
  return r;
}

inline ScalarField scalar_from_record(const FieldRecord& r) {
  if (r.kind != FieldKind::Scalar || r.components.size() != 1) fail(ErrorKind::IOError, "record is not a scalar field");
  return r.components[0];
}

inline VectorField vector_from_record(const FieldRecord& r) {
  if (r.kind != FieldKind::Vector || r.components.size() != static_cast<std::size_t>(r.grid.dim())) {
    fail(ErrorKind::IOError, "record is not a vector field");
  }
  VectorField F(r.grid);
  for (int j = 0; j < r.grid.dim(); ++j) F[j] = r.components[static_cast<std::size_t>(j)];
  return F;
}

inline CoefficientField coefficient_from_record(const FieldRecord& r) {
  const int d = r.grid.dim();
  if (r.kind != FieldKind::Coefficient || r.components.size() != static_cast<std::size_t>(d * d)) {
    fail(ErrorKind::IOError, "record is not a coefficient field");
  }
  CoefficientField a(r.grid);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l) a.entry(j, l) = r.components[static_cast<std::size_t>(j * d + l)];
  return a;
}

}  // namespace homoglab
