#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fraclab/coefficients.hpp"
#include "fraclab/error.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab {

/// Symbol weights: exp(sigma |k|), exp(c |k| log(e+|k|)^(1-kappa)), and the
/// physical-space polynomial weight (1+|x|^2)^w.
struct NormWeight {
  enum class Kind { exp_linear, exp_loglog, poly_space };

  Kind kind = Kind::exp_linear;
  double sigma = 0.0;
  double c = 0.0;
  double kappa = 0.0;
  double w = 0.0;

  static NormWeight exp_linear(double sigma) {
    detail::require(sigma >= 0.0, "sigma must be nonnegative");
    return {Kind::exp_linear, sigma, 0.0, 0.0, 0.0};
  }
  static NormWeight exp_loglog(double c, double kappa) {
    detail::require(c > 0.0, "log-weight rate c must be positive");
    detail::require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0, 1]");
    return {Kind::exp_loglog, 0.0, c, kappa, 0.0};
  }
  static NormWeight poly_space(double w) {
    return {Kind::poly_space, 0.0, 0.0, 0.0, w};
  }

  /// log of the Fourier weight at |k|.
  double log_value(double k) const {
    switch (kind) {
      case Kind::exp_linear:
        return sigma * k;
      case Kind::exp_loglog:
        return c * k * std::pow(std::log(std::numbers::e + k), 1.0 - kappa);
      case Kind::poly_space:
        break;
    }
    throw InvalidArgument("poly_space weight has no Fourier symbol");
  }
};

namespace detail {

// sqrt(sum_i exp(2 e_i) |c_i|^2) evaluated in the log domain.
template <class Exponent>
double log_weighted_norm(const SpectralField& f, Exponent&& exponent) {
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(f.size(), peak);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a == 0.0) continue;
    logs[i] = 2.0 * (exponent(i) + std::log(a));
    peak = std::max(peak, logs[i]);
  }
  if (!std::isfinite(peak)) return 0.0;
  double sum = 0.0;
  for (double l : logs)
    if (std::isfinite(l)) sum += std::exp(l - peak);
  return std::exp(0.5 * (peak + std::log(sum)));
}

}  // namespace detail

inline double l2_norm(const SpectralField& f) {
  double s = 0.0;
  for (auto c : f.coeffs()) s += std::norm(c);
  return std::sqrt(s);
}

/// Riemann-sum L2 norm of physical samples.
inline double physical_l2(const GridSpec& grid, std::span<const Complex> samples) {
  double s = 0.0;
  for (auto v : samples) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}

/// (sum_k weight(k)^2 |c_k|^2)^{1/2}.
inline double weighted_fourier_norm(const SpectralField& f, const NormWeight& w) {
  detail::require(w.kind != NormWeight::Kind::poly_space,
                  "poly_space weight acts in physical space; use weighted_l2");
  const auto& grid = f.grid();
  return detail::log_weighted_norm(
      f, [&](std::size_t i) { return w.log_value(grid.wavenumber(i)); });
}

/// sup over sampled shifts |y| <= sigma of ||f(. + iy)||, i.e. of
/// (sum_k exp(2 y.k) |c_k|^2)^{1/2}.  Radii run from 0 to sigma inclusive
/// (the sup over the open ball equals its boundary limit); in 2D y_samples
/// directions are scanned, so the result is a lower bound that increases to
/// the true value under refinement.
inline double strip_sup_norm(const SpectralField& f, double sigma, int y_samples) {
  detail::require(sigma > 0.0, "strip half-width must be positive");
  detail::require(y_samples >= 3, "y_samples must be at least 3");
  const auto& grid = f.grid();
  double best = 0.0;
  auto value_at = [&](double y0, double y1) {
    return detail::log_weighted_norm(f, [&](std::size_t i) {
      const auto k = grid.wavevector(i);
      return y0 * k[0] + y1 * k[1];
    });
  };
  if (grid.dim == 1) {
    for (int i = 0; i < y_samples; ++i) {
      const double y = -sigma + 2.0 * sigma * i / (y_samples - 1);
      best = std::max(best, value_at(y, 0.0));
    }
    return best;
  }
  best = value_at(0.0, 0.0);
  for (int d = 0; d < y_samples; ++d) {
    const double angle = 2.0 * std::numbers::pi * d / y_samples;
    for (int r = 1; r < y_samples; ++r) {
      const double rad = sigma * r / (y_samples - 1);
      best = std::max(best, value_at(rad * std::cos(angle), rad * std::sin(angle)));
    }
  }
  return best;
}

struct ASigmaNorm {
  double value = 0.0;
  double last_term = 0.0;  ///< largest term with max_axis(alpha) == alpha_max
};

/// Truncated sum_alpha sigma^|alpha| ||d^alpha a||_inf / alpha!; alpha_i <=
/// alpha_max on every axis.
inline ASigmaNorm asigma_norm(const GridSpec& grid, std::span<const double> a,
                              double sigma, int alpha_max) {
  detail::require(sigma >= 0.0, "sigma must be nonnegative");
  detail::require(alpha_max >= 0, "alpha_max must be nonnegative");
  const auto spec = clean_transform(grid, a);
  ASigmaNorm out;
  const int top1 = grid.dim == 2 ? alpha_max : 0;
  for (int a0 = 0; a0 <= alpha_max; ++a0) {
    for (int a1 = 0; a1 <= top1; ++a1) {
      const std::array<int, 2> alpha{a0, a1};
      const int order = a0 + a1;
      const double sup = derivative_sup(spec, alpha);
      const double term =
          (order == 0 ? 1.0 : std::pow(sigma, order)) * sup / multi_factorial(alpha);
      out.value += term;
      if (a0 == alpha_max || a1 == alpha_max)
        out.last_term = std::max(out.last_term, term);
    }
  }
  return out;
}

inline ASigmaNorm asigma_norm(const CoefficientField& a, double t, double sigma,
                              int alpha_max) {
  const auto s = a.samples(t);
  return asigma_norm(a.grid, s, sigma, alpha_max);
}

inline int default_alpha_max(const GridSpec& grid) { return grid.dim == 1 ? 24 : 12; }

/// Growth of the A^R norm with R for an ultra-analytic coefficient: the
/// smallest K with ||a||_{A^R} <= exp(K R^{1/(1-kappa)}) over the given radii.
struct AsigmaGrowthFit {
  double K = 0.0;
  std::vector<double> norms;
};

inline AsigmaGrowthFit fit_asigma_growth(const CoefficientField& a, double t,
                                         const std::vector<double>& radii,
                                         double kappa, int alpha_max) {
  detail::require(kappa >= 0.0 && kappa < 1.0, "kappa must lie in [0, 1)");
  AsigmaGrowthFit fit;
  for (double R : radii) {
    detail::require(R > 0.0, "radii must be positive");
    const double v = asigma_norm(a, t, R, alpha_max).value;
    fit.norms.push_back(v);
    fit.K = std::max(fit.K, std::log(v) / std::pow(R, 1.0 / (1.0 - kappa)));
  }
  return fit;
}

/// sup_{r >= 0} exp(r - r^s): the constant in the semigroup smoothing bound
/// into the strip of half-width t^{1/s}.
inline double smoothing_constant(double s) {
  detail::require(s > 1.0, "smoothing constant needs s > 1");
  auto g = [s](double r) { return r - std::pow(r, s); };
  double lo = 0.0, hi = 1.0;  // maximizer lies in (0, 1) for s > 1
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - ratio * (hi - lo), m2 = lo + ratio * (hi - lo);
    if (g(m1) < g(m2))
      lo = m1;
    else
      hi = m2;
  }
  return std::exp(std::max(0.0, g(0.5 * (lo + hi))));
}

/// L2 norm of the field restricted to E (grid quadrature).
inline double restricted_l2(const SpectralField& f, const ThickSet& set) {
  detail::require(f.grid() == set.grid(), "set grid does not match field grid");
  const auto u = inverse(f);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (set.contains(i)) s += std::norm(u[i]);
  return std::sqrt(s * f.grid().cell_volume());
}

/// (integral |u|^2 (1+|x|^2)^w dx)^{1/2} with |x| measured in the centered
/// fundamental domain.
inline double weighted_l2(const SpectralField& f, double w) {
  const auto& grid = f.grid();
  const auto u = inverse(f);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double x = grid.centered_coordinate(i, a);
      r2 += x * x;
    }
    s += std::norm(u[i]) * std::pow(1.0 + r2, w);
  }
  return std::sqrt(s * grid.cell_volume());
}

}  // namespace fraclab
