#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "fraclab/error.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/solver.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab::io {

/// Shortest round-tripping decimal form ("%.17g"); "inf", "-inf", "nan".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// RFC-4180 style writer: comma separated, CRLF-free, fields quoted when
/// they contain a comma, quote or newline.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(fields[i]);
    }
    out_ << '\n';
  }

  template <class... Ts>
  void values(const Ts&... vs) {
    row({cell(vs)...});
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  static std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
    std::string q = "\"";
    for (char c : f) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  std::ostream& out_;
};

/// Trajectory diagnostics as CSV: t,l2,l2_on_E,radius_estimate.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  CsvWriter w(out, {"t", "l2", "l2_on_E", "radius_estimate"});
  for (const auto& d : traj.diagnostics) w.values(d.t, d.l2, d.l2_on_E, d.radius_estimate);
}

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little ||
                std::endian::native == std::endian::big);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw InvalidArgument("truncated binary file");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[9]) {
  char buf[8];
  if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0)
    throw InvalidArgument("bad file magic");
}

}  // namespace detail

inline constexpr char kSnapshotMagic[9] = "FLSNAP01";
inline constexpr char kMaskMagic[9] = "FLMASK01";

/// Spectral snapshot layout (little-endian):
///   8 bytes magic "FLSNAP01", uint32 dim, uint32 points, float64 period,
///   float64 time, then points^dim (re, im) float64 pairs in row-major
///   storage order.
inline void write_snapshot(std::ostream& out, const SpectralField& f, double time) {
  out.write(kSnapshotMagic, 8);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid().dim));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid().points));
  detail::put_le<double>(out, f.grid().period);
  detail::put_le<double>(out, time);
  for (auto c : f.coeffs()) {
    detail::put_le<double>(out, c.real());
    detail::put_le<double>(out, c.imag());
  }
}

struct Snapshot {
  SpectralField field;
  double time = 0.0;
};

inline Snapshot read_snapshot(std::istream& in) {
  detail::expect_magic(in, kSnapshotMagic);
  GridSpec grid;
  grid.dim = static_cast<int>(detail::get_le<std::uint32_t>(in));
  grid.points = static_cast<int>(detail::get_le<std::uint32_t>(in));
  grid.period = detail::get_le<double>(in);
  grid.validate();
  Snapshot snap;
  snap.time = detail::get_le<double>(in);
  std::vector<Complex> c(grid.size());
  for (auto& z : c) {
    const double re = detail::get_le<double>(in);
    const double im = detail::get_le<double>(in);
    z = {re, im};
  }
  snap.field = SpectralField(grid, std::move(c));
  return snap;
}

/// Set bitmask layout (little-endian):
///   8 bytes magic "FLMASK01", uint32 dim, uint32 points, float64 period,
///   float64 L, then ceil(points^dim / 8) bytes; cell i (row-major) is bit
///   (i % 8) of byte i / 8, least significant bit first.
inline void write_mask(std::ostream& out, const ThickSet& set) {
  out.write(kMaskMagic, 8);
  const auto& g = set.grid();
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.points));
  detail::put_le<double>(out, g.period);
  detail::put_le<double>(out, set.scale());
  std::vector<unsigned char> bytes((g.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (set.contains(i)) bytes[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline ThickSet read_mask(std::istream& in) {
  detail::expect_magic(in, kMaskMagic);
  GridSpec grid;
  grid.dim = static_cast<int>(detail::get_le<std::uint32_t>(in));
  grid.points = static_cast<int>(detail::get_le<std::uint32_t>(in));
  grid.period = detail::get_le<double>(in);
  grid.validate();
  const double L = detail::get_le<double>(in);
  std::vector<unsigned char> bytes((grid.size() + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size())))
    throw InvalidArgument("truncated mask file");
  std::vector<std::uint8_t> ind(grid.size());
  for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return ThickSet(grid, std::move(ind), L);
}

}  // namespace fraclab::io
