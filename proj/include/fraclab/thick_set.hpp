#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "fraclab/error.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/rng.hpp"

namespace fraclab {

namespace detail {

// Number of grid cells spanned by a cube side of length L; L must be an
// integer number of cells and must tile the period exactly.
inline int cells_per_side(const GridSpec& grid, double L) {
  require(std::isfinite(L) && L > 0.0, "cube scale L must be positive");
  const double c = L / grid.spacing();
  const long rc = std::lround(c);
  require(rc >= 1 && std::abs(c - rc) < 1e-9 * std::max(1.0, c),
          "cube scale L must be a whole number of grid cells");
  require(grid.points % rc == 0, "cube scale L must divide the period");
  return static_cast<int>(rc);
}

// Cyclic window sums of width w along one axis of a row-major array.
inline std::vector<long> cyclic_window_sums(const std::vector<long>& in, int n,
                                            int w, int dim, int axis) {
  std::vector<long> out(in.size());
  const int lines = dim == 1 ? 1 : n;
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int j) -> std::size_t {
      if (dim == 1) return static_cast<std::size_t>(j);
      return axis == 0 ? static_cast<std::size_t>(j) * n + line
                       : static_cast<std::size_t>(line) * n + j;
    };
    long sum = 0;
    for (int j = 0; j < w; ++j) sum += in[at(j % n)];
    for (int start = 0; start < n; ++start) {
      out[at(start)] = sum;
      sum += in[at((start + w) % n)] - in[at(start)];
    }
  }
  return out;
}

}  // namespace detail

/// Exact discrete thickness: the minimum over all grid translates of the
/// axis-aligned cube of side L of the fraction of cells that lie in E.
inline double thickness(const GridSpec& grid,
                        const std::vector<std::uint8_t>& indicator, double L) {
  grid.validate();
  detail::require(indicator.size() == grid.size(),
                  "indicator shape does not match grid");
  const int w = detail::cells_per_side(grid, L);
  std::vector<long> counts(indicator.begin(), indicator.end());
  for (auto& c : counts) c = c ? 1 : 0;
  counts = detail::cyclic_window_sums(counts, grid.points, w, grid.dim, 0);
  if (grid.dim == 2)
    counts = detail::cyclic_window_sums(counts, grid.points, w, grid.dim, 1);
  const long least = *std::min_element(counts.begin(), counts.end());
  return static_cast<double>(least) / std::pow(double(w), grid.dim);
}

/// Observation set on the grid together with its certified thickness.
class ThickSet {
 public:
  ThickSet(GridSpec grid, std::vector<std::uint8_t> indicator, double L)
      : grid_(grid), indicator_(std::move(indicator)), L_(L) {
    for (auto& v : indicator_) v = v ? 1 : 0;
    gamma_ = thickness(grid_, indicator_, L_);
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<std::uint8_t>& indicator() const { return indicator_; }
  bool contains(std::size_t i) const { return indicator_[i] != 0; }
  double scale() const { return L_; }
  double gamma() const { return gamma_; }
  bool is_thick() const { return gamma_ > 0.0; }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(
        std::count(indicator_.begin(), indicator_.end(), std::uint8_t{1}));
  }
  double measure() const { return grid_.cell_volume() * cell_count(); }
  double volume_fraction() const {
    return static_cast<double>(cell_count()) / grid_.size();
  }

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> indicator_;
  double L_;
  double gamma_ = 0.0;
};

/// Stripes along axis 0: in each period-L block the first round(p * cells)
/// cell columns belong to E.
struct PeriodicSlab {
  double fraction = 0.5;
  double L = 0.0;
};

/// Each L-cube independently receives round(p * cells) member cells chosen
/// uniformly at random.
struct RandomPerCell {
  double fraction = 0.5;
  double L = 0.0;
  std::uint64_t seed = 0;
};

/// E = torus minus the ball |x| < radius around the origin (centered
/// coordinates); thickness measured at scale L.
struct ComplementOfBall {
  double radius = 1.0;
  double L = 0.0;
};

struct ExplicitMask {
  std::vector<std::uint8_t> indicator;
  double L = 0.0;
};

using SetSpec =
    std::variant<PeriodicSlab, RandomPerCell, ComplementOfBall, ExplicitMask>;

namespace detail {

inline void require_fraction(double p) {
  require(p > 0.0 && p <= 1.0, "set fraction must lie in (0, 1]");
}

inline ThickSet build(const GridSpec& grid, const PeriodicSlab& spec) {
  require_fraction(spec.fraction);
  const int c = cells_per_side(grid, spec.L);
  const long q = std::lround(spec.fraction * c);
  std::vector<std::uint8_t> ind(grid.size());
  for (std::size_t i = 0; i < ind.size(); ++i) {
    const auto j0 = static_cast<long>(grid.dim == 1 ? i : i / grid.points);
    ind[i] = (j0 % c) < q;
  }
  return ThickSet(grid, std::move(ind), spec.L);
}

inline ThickSet build(const GridSpec& grid, const RandomPerCell& spec) {
  require_fraction(spec.fraction);
  const int c = cells_per_side(grid, spec.L);
  const int blocks_per_axis = grid.points / c;
  const std::size_t per_block =
      grid.dim == 1 ? std::size_t(c) : std::size_t(c) * c;
  const auto q = static_cast<std::size_t>(std::lround(spec.fraction * per_block));
  const std::size_t blocks =
      grid.dim == 1 ? std::size_t(blocks_per_axis)
                    : std::size_t(blocks_per_axis) * blocks_per_axis;
  std::vector<std::uint8_t> ind(grid.size());
  std::vector<std::size_t> order(per_block);
  for (std::size_t b = 0; b < blocks; ++b) {
    CounterRng rng(spec.seed, b);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < q; ++i) {
      const auto r = i + static_cast<std::size_t>(rng.next_u64() % (per_block - i));
      std::swap(order[i], order[r]);
    }
    for (std::size_t i = 0; i < q; ++i) {
      const std::size_t local = order[i];
      std::size_t flat;
      if (grid.dim == 1) {
        flat = b * c + local;
      } else {
        const std::size_t b0 = b / blocks_per_axis, b1 = b % blocks_per_axis;
        const std::size_t r = b0 * c + local / c, col = b1 * c + local % c;
        flat = r * grid.points + col;
      }
      ind[flat] = 1;
    }
  }
  return ThickSet(grid, std::move(ind), spec.L);
}

inline ThickSet build(const GridSpec& grid, const ComplementOfBall& spec) {
  require(spec.radius >= 0.0, "ball radius must be nonnegative");
  std::vector<std::uint8_t> ind(grid.size());
  for (std::size_t i = 0; i < ind.size(); ++i) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double x = grid.centered_coordinate(i, a);
      r2 += x * x;
    }
    ind[i] = r2 >= spec.radius * spec.radius;
  }
  return ThickSet(grid, std::move(ind), spec.L);
}

inline ThickSet build(const GridSpec& grid, const ExplicitMask& spec) {
  return ThickSet(grid, spec.indicator, spec.L);
}

}  // namespace detail

inline ThickSet build_set(const GridSpec& grid, const SetSpec& spec) {
  grid.validate();
  return std::visit([&](const auto& s) { return detail::build(grid, s); },
                    spec);
}

}  // namespace fraclab
