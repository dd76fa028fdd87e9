#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "fraclab/error.hpp"

namespace fraclab {

/// Uniform periodic grid on the torus [0, period)^dim.
///
/// Samples sit at x_j = j * period / points.  Mode index j along an axis
/// stands for the integer frequency m = j for j < points/2 and m = j - points
/// otherwise, i.e. m in [-points/2, points/2), with physical wavenumber
/// k = 2*pi*m / period.  Arrays are row-major with axis 0 slowest.
struct GridSpec {
  int dim = 1;
  int points = 64;
  double period = 2.0 * std::numbers::pi;

  void validate() const {
    detail::require(dim == 1 || dim == 2, "grid dim must be 1 or 2");
    detail::require(points >= 8 && points % 2 == 0,
                    "points_per_axis must be an even integer >= 8");
    detail::require(std::isfinite(period) && period > 0.0,
                    "period must be positive");
  }

  std::size_t size() const {
    return dim == 1 ? static_cast<std::size_t>(points)
                    : static_cast<std::size_t>(points) * points;
  }

  double spacing() const { return period / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double volume() const { return std::pow(period, dim); }

  /// Spacing of the frequency lattice, 2*pi / period.
  double frequency_step() const { return 2.0 * std::numbers::pi / period; }

  /// Largest per-axis wavenumber magnitude (the Nyquist mode).
  double nyquist() const { return std::numbers::pi * points / period; }

  /// Largest |k| over the whole lattice (the corner mode in 2D).
  double max_wavenumber() const { return std::sqrt(double(dim)) * nyquist(); }

  int mode_of_index(int j) const { return j < points / 2 ? j : j - points; }
  int index_of_mode(int m) const { return ((m % points) + points) % points; }

  /// Per-axis integer frequencies of flat index i (unused axes are 0).
  std::array<int, 2> modes(std::size_t i) const {
    if (dim == 1) return {mode_of_index(static_cast<int>(i)), 0};
    return {mode_of_index(static_cast<int>(i / points)),
            mode_of_index(static_cast<int>(i % points))};
  }

  std::array<double, 2> wavevector(std::size_t i) const {
    auto m = modes(i);
    return {frequency_step() * m[0], frequency_step() * m[1]};
  }

  double wavenumber(std::size_t i) const {
    auto k = wavevector(i);
    return std::hypot(k[0], k[1]);
  }

  bool is_nyquist_axis(int m) const { return m == -points / 2; }

  /// Sample coordinate in [0, period) along the given axis.
  double coordinate(std::size_t i, int axis) const {
    const std::size_t j =
        dim == 1 ? i : (axis == 0 ? i / points : i % points);
    return spacing() * static_cast<double>(j);
  }

  /// Coordinate in the centered fundamental domain [-period/2, period/2).
  double centered_coordinate(std::size_t i, int axis) const {
    const double x = coordinate(i, axis);
    return x >= 0.5 * period ? x - period : x;
  }

  bool operator==(const GridSpec&) const = default;
};

}  // namespace fraclab
