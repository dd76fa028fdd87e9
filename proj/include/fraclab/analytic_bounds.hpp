#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fraclab/coefficients.hpp"
#include "fraclab/error.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// sum_j M_j^2 with M_j = sup_alpha sigma^|alpha| / |alpha|! ||d^alpha f||_inf
/// over the closed cube of side 2L centered at the lattice point jL; the sup
/// over alpha is truncated at |alpha| <= alpha_max.
inline double cell_derivative_sum(const SpectralField& f, double sigma, double L,
                                  int alpha_max = 40) {
  const auto& grid = f.grid();
  detail::require(sigma > 0.0, "sigma must be positive");
  const double cells_d = grid.period / L;
  const long cells = std::lround(cells_d);
  detail::require(cells >= 1 && std::abs(cells_d - cells) < 1e-9,
                  "L must divide the period");
  const std::size_t ncell = grid.dim == 1 ? cells : cells * cells;

  // Periodic distance from sample coordinate x to the center c along an axis.
  auto dist = [&](double x, double c) {
    double d = std::fmod(std::abs(x - c), grid.period);
    return std::min(d, grid.period - d);
  };
  // Sample points inside each closed cube, collected once.
  std::vector<std::vector<std::size_t>> members(ncell);
  for (std::size_t j = 0; j < ncell; ++j) {
    const double c0 = L * static_cast<double>(grid.dim == 1 ? j : j / cells);
    const double c1 = L * static_cast<double>(grid.dim == 1 ? 0 : j % cells);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (dist(grid.coordinate(i, 0), c0) > L + 1e-12) continue;
      if (grid.dim == 2 && dist(grid.coordinate(i, 1), c1) > L + 1e-12) continue;
      members[j].push_back(i);
    }
  }
  std::vector<double> M(ncell, 0.0);
  for (const auto& alpha : multi_indices(grid.dim, alpha_max)) {
    const int order = alpha[0] + alpha[1];
    const double w = std::pow(sigma, order) / std::tgamma(order + 1.0);
    const auto d = inverse(derivative(f, alpha));
    for (std::size_t j = 0; j < ncell; ++j) {
      double sup = 0.0;
      for (std::size_t i : members[j]) sup = std::max(sup, std::abs(d[i]));
      M[j] = std::max(M[j], w * sup);
    }
  }
  double total = 0.0;
  for (double m : M) total += m * m;
  return total;
}

struct EnvelopeFit {
  double K = 0.0;
  double min_residual = 0.0;  ///< min_i log(K e^{K g(t_i)}) - log v_i, >= 0
};

/// Smallest K > 0 with K exp(K (t^{-1/(s-1)} + t)) >= v(t) at every sample.
inline EnvelopeFit envelope_fit(const std::vector<double>& t, const std::vector<double>& v,
                                double s) {
  detail::require(t.size() == v.size() && !t.empty(), "envelope data mismatch");
  detail::require(s > 1.0, "envelope shape needs s > 1");
  std::vector<double> g(t.size()), lv(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    detail::require(t[i] > 0.0, "envelope times must be positive");
    detail::require(std::isfinite(v[i]) && v[i] > 0.0, "envelope values must be finite");
    g[i] = std::pow(t[i], -1.0 / (s - 1.0)) + t[i];
    lv[i] = std::log(v[i]);
  }
  auto slack = [&](double K) {
    double m = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) m = std::min(m, std::log(K) + K * g[i] - lv[i]);
    return m;
  };
  double lo = 1e-12, hi = 1.0;
  EnvelopeFit fit;
  if (slack(lo) >= 0.0) {
    fit.K = lo;
  } else {
    while (slack(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slack(mid) >= 0.0 ? hi : lo) = mid;
    }
    fit.K = hi;
  }
  fit.min_residual = slack(fit.K);
  return fit;
}

}  // namespace fraclab
