#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "fraclab/error.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// sup |d^alpha a| <= C alpha! / R^|alpha|  (real analytic, uniform in t).
struct ClassA1 {
  double C = 0.0;
  double R = 1.0;
};

/// sup |d^alpha a| <= C M^|alpha| (alpha!)^kappa  (ultra-analytic for kappa < 1).
struct ClassA2 {
  double C = 0.0;
  double M = 0.0;
  double kappa = 0.0;
};

using CoefficientClass = std::variant<ClassA1, ClassA2>;

/// Lower-order term a(t, x) sampled on a grid, with its declared class.
struct CoefficientField {
  GridSpec grid;
  std::function<std::vector<double>(double)> evaluator;
  CoefficientClass declared;
  std::string description;
  bool time_dependent = false;

  std::vector<double> samples(double t) const { return evaluator(t); }
};

inline double multi_factorial(std::array<int, 2> alpha) {
  return std::tgamma(alpha[0] + 1.0) * std::tgamma(alpha[1] + 1.0);
}

/// Class bound for derivative order alpha.
inline double class_bound(const CoefficientClass& cls, std::array<int, 2> alpha) {
  const int order = alpha[0] + alpha[1];
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ClassA1>) {
          return c.C * multi_factorial(alpha) / std::pow(c.R, order);
        } else {
          const double mpow = order == 0 ? 1.0 : std::pow(c.M, order);
          return c.C * mpow * std::pow(multi_factorial(alpha), c.kappa);
        }
      },
      cls);
}

/// All multi-indices with |alpha| <= max_order (second component 0 in 1D).
inline std::vector<std::array<int, 2>> multi_indices(int dim, int max_order) {
  std::vector<std::array<int, 2>> out;
  for (int total = 0; total <= max_order; ++total) {
    if (dim == 1) {
      out.push_back({total, 0});
    } else {
      for (int a0 = total; a0 >= 0; --a0) out.push_back({a0, total - a0});
    }
  }
  return out;
}

/// Spectral coefficients of a real sample array with round-off modes
/// (below 1e-14 of the largest) removed, so high derivatives of
/// trigonometric polynomials stay exact.
inline SpectralField clean_transform(const GridSpec& grid,
                                     std::span<const double> samples) {
  auto f = transform(grid, samples);
  double peak = 0.0;
  for (auto c : f.coeffs()) peak = std::max(peak, std::abs(c));
  const double floor = 1e-14 * peak;
  for (auto& c : f.coeffs())
    if (std::abs(c) <= floor) c = 0.0;
  return f;
}

inline double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// ||d^alpha a||_inf over grid points, computed spectrally.
inline double derivative_sup(const SpectralField& spectrum,
                             std::array<int, 2> alpha) {
  return sup_abs(inverse_real(derivative(spectrum, alpha)));
}

struct ClassReport {
  bool pass = false;
  double worst_ratio = 0.0;
  std::array<int, 2> worst_alpha{0, 0};
  double worst_time = 0.0;
};

/// Certify the declared class for |alpha| <= alpha_max at the given times.
inline ClassReport verify_class(const CoefficientField& a, int alpha_max,
                                const std::vector<double>& t_grid) {
  detail::require(alpha_max >= 1, "alpha_max must be at least 1");
  detail::require(!t_grid.empty(), "time grid is empty");
  ClassReport rep;
  const auto alphas = multi_indices(a.grid.dim, alpha_max);
  for (double t : t_grid) {
    const auto s = a.samples(t);
    const auto spec = clean_transform(a.grid, s);
    for (const auto& alpha : alphas) {
      const double observed = derivative_sup(spec, alpha);
      const double bound = class_bound(a.declared, alpha);
      double ratio;
      if (bound > 0.0)
        ratio = observed / bound;
      else
        ratio = observed == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_alpha = alpha;
        rep.worst_time = t;
      }
    }
  }
  rep.pass = rep.worst_ratio <= 1.0 + 1e-9;
  return rep;
}

/// Smallest C for which the class shape (R, or M and kappa) holds on the
/// sampled derivatives.  The C stored in `shape` is ignored.
inline double fit_class_constant(const CoefficientField& a,
                                 CoefficientClass shape, int alpha_max,
                                 const std::vector<double>& t_grid) {
  std::visit([](auto& c) { c.C = 1.0; }, shape);
  double best = 0.0;
  const auto alphas = multi_indices(a.grid.dim, alpha_max);
  for (double t : t_grid) {
    const auto spec = clean_transform(a.grid, a.samples(t));
    for (const auto& alpha : alphas) {
      const double bound = class_bound(shape, alpha);
      const double observed = derivative_sup(spec, alpha);
      if (bound > 0.0) best = std::max(best, observed / bound);
    }
  }
  return best;
}

inline CoefficientField zero_coefficient(const GridSpec& grid) {
  grid.validate();
  return {grid, [n = grid.size()](double) { return std::vector<double>(n); },
          ClassA1{0.0, 1.0}, "zero", false};
}

inline CoefficientField constant_coefficient(const GridSpec& grid, double value) {
  grid.validate();
  return {grid,
          [n = grid.size(), value](double) { return std::vector<double>(n, value); },
          ClassA1{std::abs(value), 1.0}, "constant(" + std::to_string(value) + ")",
          false};
}

/// amplitude * cos(omega t) * cos(k x_0) with k = 2 pi mode / period; omega = 0
/// gives the time-independent cosine.
inline CoefficientField time_cosine_coefficient(const GridSpec& grid,
                                                double amplitude, int mode,
                                                double time_freq) {
  grid.validate();
  detail::require(std::abs(mode) < grid.points / 3,
                  "cosine mode must lie inside the dealiased band");
  const double k = grid.frequency_step() * mode;
  auto eval = [grid, amplitude, k, time_freq](double t) {
    std::vector<double> out(grid.size());
    const double amp = amplitude * std::cos(time_freq * t);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = amp * std::cos(k * grid.coordinate(i, 0));
    return out;
  };
  return {grid, eval, ClassA2{std::abs(amplitude), std::abs(k), 0.0},
          "time_cosine(" + std::to_string(amplitude) + "," +
              std::to_string(mode) + "," + std::to_string(time_freq) + ")",
          time_freq != 0.0};
}

inline CoefficientField cosine_coefficient(const GridSpec& grid, double amplitude,
                                           int mode) {
  auto a = time_cosine_coefficient(grid, amplitude, mode, 0.0);
  a.description = "cosine(" + std::to_string(amplitude) + "," +
                  std::to_string(mode) + ")";
  return a;
}

/// Random-phase field with Fourier amplitudes exp(-R |k|) over the dealiased
/// band, declared (A1) with radius R/2 and C fitted from |alpha| <= 24.
inline CoefficientField fourier_decay_coefficient(const GridSpec& grid,
                                                  double R, std::uint64_t seed) {
  grid.validate();
  detail::require(R > 0.0, "decay radius must be positive");
  const int cutoff = grid.points / 3;
  std::vector<double> samples(grid.size(), 0.0);
  CounterRng rng(seed, 0);
  std::vector<std::array<int, 2>> modes;
  // Half lattice: one representative of each +-m pair.
  for (int m0 = 0; m0 <= cutoff; ++m0) {
    for (int m1 = (grid.dim == 1 ? 0 : -cutoff); m1 <= (grid.dim == 1 ? 0 : cutoff);
         ++m1) {
      if (m0 == 0 && m1 <= 0) continue;
      modes.push_back({m0, m1});
    }
  }
  for (const auto& m : modes) {
    const double k0 = grid.frequency_step() * m[0];
    const double k1 = grid.frequency_step() * m[1];
    const double amp = std::exp(-R * std::hypot(k0, k1));
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double arg = k0 * grid.coordinate(i, 0) + phase;
      if (grid.dim == 2) arg += k1 * grid.coordinate(i, 1);
      samples[i] += amp * std::cos(arg);
    }
  }
  CoefficientField a{grid, [samples](double) { return samples; },
                     ClassA1{1.0, R / 2.0},
                     "fourier_decay(" + std::to_string(R) + "," +
                         std::to_string(seed) + ")",
                     false};
  const double C = fit_class_constant(a, ClassA1{1.0, R / 2.0}, 24, {0.0});
  a.declared = ClassA1{C * (1.0 + 1e-12), R / 2.0};
  return a;
}

/// Named constructor used by configuration files.
inline CoefficientField builtin_coefficient(const GridSpec& grid,
                                            const std::string& name,
                                            const std::map<std::string, double>& p) {
  auto get = [&](const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  if (name == "zero") return zero_coefficient(grid);
  if (name == "constant") return constant_coefficient(grid, get("value", 0.0));
  if (name == "cosine")
    return cosine_coefficient(grid, get("amplitude", 1.0),
                              static_cast<int>(get("mode", 1)));
  if (name == "time_cosine")
    return time_cosine_coefficient(grid, get("amplitude", 1.0),
                                   static_cast<int>(get("mode", 1)),
                                   get("time_freq", 1.0));
  if (name == "fourier_decay")
    return fourier_decay_coefficient(grid, get("radius", 0.5),
                                     static_cast<std::uint64_t>(get("seed", 0)));
  throw InvalidArgument("unknown coefficient '" + name + "'");
}

/// A and B of the weighted-to-unweighted change of variable v = (1+|x|^2)^{w/2} u,
/// without the a(t, x) contribution to A.
struct DriftPair {
  std::vector<double> A;
  std::vector<std::vector<double>> B;
};

inline DriftPair weight_transform(double w, const GridSpec& grid) {
  grid.validate();
  DriftPair out;
  out.A.resize(grid.size());
  out.B.assign(grid.dim, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double x = grid.centered_coordinate(i, a);
      r2 += x * x;
    }
    out.A[i] = w * (w - 1.0) / std::sqrt(1.0 + r2);
    for (int a = 0; a < grid.dim; ++a)
      out.B[a][i] = 2.0 * w * grid.centered_coordinate(i, a) / (1.0 + r2);
  }
  return out;
}

struct HsDerivativeReport {
  bool pass = false;
  double K = 0.0;             ///< smallest K with sup|h^(m)| <= K base^m m!
  double base = 12.0;
  double period = 0.0;
  int points = 0;
  double boundary_value = 0.0;    ///< h_s at the torus boundary |x| = period/2
  double derivative_error = 0.0;  ///< max relative error of h^(m)(0) vs Taylor
  std::vector<double> sup_norms;  ///< sup |h^(m)| for m = 0..alpha_max
};

/// Derivative growth of h_s(x) = (1+x^2)^{-s/2} in one dimension.
///
/// The torus is wide enough that h_s < 2.5e-3 at the boundary (period at
/// least 40).  Samples of h_s itself would have a derivative kink at the
/// boundary, so the spectrum is taken from the whole-line transform
///   int (1+x^2)^{-s/2} e^{-ikx} dx = 2 sqrt(pi) / Gamma(s/2) (|k|/2)^nu K_nu(|k|),
/// nu = (s-1)/2, which by Poisson summation is the spectrum of the smooth
/// periodization sum_j h_s(x + j period).  Order 0 uses h_s directly (the
/// periodization diverges for s <= 1); derivative_error compares the
/// derivatives at 0 with the Taylor values and so measures the image sum.
inline HsDerivativeReport h_s_derivative_check(double s, int alpha_max,
                                               double base = 12.0) {
  detail::require(s > 0.0, "h_s exponent must be positive");
  detail::require(alpha_max >= 0, "alpha_max must be nonnegative");
  detail::require(base > 0.0, "base must be positive");
  HsDerivativeReport rep;
  rep.base = base;
  const double half = std::sqrt(std::pow(2.5e-3, -2.0 / s) - 1.0);
  rep.period = std::max(40.0, 2.0 * std::ceil(half + 1e-9));
  // Resolve wavenumbers up to about 50; the transform decays like exp(-|k|).
  int n = 64;
  while (std::numbers::pi * n / rep.period < 50.0) n *= 2;
  rep.points = n;
  const GridSpec grid{1, n, rep.period};
  rep.boundary_value = std::pow(1.0 + 0.25 * rep.period * rep.period, -s / 2.0);

  const double nu = 0.5 * (s - 1.0);
  const double pref = 2.0 * std::sqrt(std::numbers::pi) / std::tgamma(0.5 * s);
  SpectralField spec(grid);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double k = grid.wavenumber(i);
    if (k == 0.0) continue;  // does not enter derivatives of order >= 1
    const double hat = pref * std::pow(0.5 * k, nu) * std::cyl_bessel_k(std::abs(nu), k);
    spec[i] = hat / std::sqrt(grid.period);
  }

  // Taylor coefficients of (1+x^2)^{-s/2} at 0: binom(-s/2, j) x^{2j}.
  double binom = 1.0;
  for (int m = 0; m <= alpha_max; ++m) {
    double sup, at_zero;
    if (m == 0) {
      sup = 1.0;  // attained at x = 0
      at_zero = 1.0;
    } else {
      const auto d = inverse_real(derivative(spec, {m, 0}));
      sup = sup_abs(d);
      at_zero = d[0];
    }
    rep.sup_norms.push_back(sup);
    rep.K = std::max(rep.K, sup / (std::pow(base, m) * std::tgamma(m + 1.0)));
    double exact = 0.0;
    if (m % 2 == 0) {
      const int j = m / 2;
      if (j > 0) binom *= (-s / 2.0 - (j - 1)) / j;
      exact = std::tgamma(m + 1.0) * binom;
    }
    const double err = std::abs(at_zero - exact) / std::max(1.0, std::abs(exact));
    rep.derivative_error = std::max(rep.derivative_error, err);
  }
  rep.pass = std::isfinite(rep.K);
  return rep;
}

}  // namespace fraclab
