#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fraclab/error.hpp"

namespace fraclab {

/// Interpolation data fed to the telescoping construction: an inequality
///   ||u(t2)||^2 <= C e^{C/(t2-t1)^gap_exponent} (int_{t1}^{t2} ||u||_E^2)^theta
///                  ||u(t1)||^{2(1-theta)}
/// on 0 < t1 < t2 <= 1, and the horizon T.
struct TelescopeInput {
  double C_interp = 1.0;
  double theta = 0.5;
  double gap_exponent = 1.0;
  double T = 1.0;

  void validate() const {
    detail::require(std::isfinite(C_interp) && C_interp >= 1.0, "C_interp must be >= 1");
    detail::require(theta > 0.0 && theta < 1.0, "theta must lie in (0, 1)");
    detail::require(gap_exponent > 0.0, "gap_exponent must be positive");
    detail::require(T > 0.0 && T <= 1.0, "T must lie in (0, 1]");
  }

  /// Ratio of consecutive gaps of the geometric time sequence l_m = lambda^{m-1} T.
  double lambda() const {
    return std::pow((C_interp + 1.0 - theta) / (C_interp + 1.0), 1.0 / gap_exponent);
  }
};

struct TelescopeConstant {
  double lambda = 0.0;
  double closed_form = 0.0;   ///< C^{1/theta} exp((C+1) / (theta T^delta))
  double series_value = 0.0;  ///< constant produced by summing the telescoped chain
  double log_closed_form = 0.0;
  double log_series_value = 0.0;  ///< finite even where series_value overflows
  int terms = 0;
};

/// Observability constant from the telescoping chain over l_m = lambda^{m-1} T.
///
/// With gaps g_m = l_m - l_{m+1} and weights w_m = exp(-(C+1-theta)/(theta g_m^delta)),
/// each link gives w_m ||u(l_m)||^2 - w_{m+1} ||u(l_{m+1})||^2
/// <= C^{1/theta} int_{l_{m+1}}^{l_m} ||u||_E^2; the sum is evaluated term by
/// term until w_{m+1} < 1e-16 w_1 and series_value = C^{1/theta} / sum.
inline TelescopeConstant telescope_constant(const TelescopeInput& in) {
  in.validate();
  TelescopeConstant out;
  const double C = in.C_interp, th = in.theta, d = in.gap_exponent;
  out.lambda = in.lambda();
  out.log_closed_form = std::log(C) / th + (C + 1.0) / (th * std::pow(in.T, d));
  out.closed_form = std::exp(out.log_closed_form);

  auto log_weight = [&](int m) {  // log w_m, m >= 1
    const double gap = in.T * std::pow(out.lambda, m - 1) * (1.0 - out.lambda);
    return -(C + 1.0 - th) / (th * std::pow(gap, d));
  };
  const double log_w1 = log_weight(1);
  double sum = 0.0;  // sum of (w_m - w_{m+1}) / w_1
  for (int m = 1; m <= 10000; ++m) {
    const double a = std::exp(log_weight(m) - log_w1);
    const double b = std::exp(log_weight(m + 1) - log_w1);
    sum += a - b;
    out.terms = m;
    if (b < 1e-16) break;
  }
  out.log_series_value = std::log(C) / th - log_w1 - std::log(sum);
  out.series_value = std::exp(out.log_series_value);
  return out;
}

/// Bound B(gap) = C (2/gap)^theta exp(C 2^delta / gap^delta) turning a
/// final-time interpolation inequality into a space-time one, and the
/// smallest C0 with C0 exp(C0 / gap^delta) >= B(gap) on (0, 1].
class SpacetimeLift {
 public:
  SpacetimeLift(double C, double gap_exponent, double theta)
      : C_(C), delta_(gap_exponent), theta_(theta) {
    detail::require(C > 0.0 && gap_exponent > 0.0, "lift inputs must be positive");
    detail::require(theta > 0.0 && theta < 1.0 + 1e-15, "theta must lie in (0, 1]");
    absorbed_ = compute_absorbed();
  }

  double operator()(double gap) const { return std::exp(log_bound(gap)); }

  double log_bound(double gap) const {
    return std::log(C_) + theta_ * std::log(2.0 / gap) +
           C_ * std::pow(2.0, delta_) / std::pow(gap, delta_);
  }

  /// C0 of the single-constant form C0 exp(C0 / gap^delta).
  double absorbed_constant() const { return absorbed_; }

  double absorbed(double gap) const {
    return absorbed_ * std::exp(absorbed_ / std::pow(gap, delta_));
  }

  /// Smallest c with log c + c / gap^delta >= log B(gap).
  double required_constant(double gap) const {
    const double target = log_bound(gap);
    const double scale = 1.0 / std::pow(gap, delta_);
    auto f = [&](double c) { return std::log(c) + c * scale - target; };
    double lo = 1e-300, hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
      if (hi - lo <= 1e-15 * hi) break;
    }
    return hi;
  }

 private:
  double compute_absorbed() const {
    // required_constant(gap) -> C 2^delta as gap -> 0; its sup on (0, 1] sits
    // at a positive gap, located on a log grid and refined by golden section.
    const int n = 4000;
    double best = C_ * std::pow(2.0, delta_), best_gap = 1.0;
    for (int i = 0; i <= n; ++i) {
      const double gap = std::pow(10.0, -10.0 + 10.0 * i / n);
      const double c = required_constant(gap);
      if (c > best) {
        best = c;
        best_gap = gap;
      }
    }
    double lo = std::log(best_gap) - 0.01, hi = std::min(0.0, std::log(best_gap) + 0.01);
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
      if (required_constant(std::exp(m1)) < required_constant(std::exp(m2)))
        lo = m1;
      else
        hi = m2;
    }
    best = std::max(best, required_constant(std::exp(0.5 * (lo + hi))));
    return best * (1.0 + 1e-12);
  }

  double C_, delta_, theta_;
  double absorbed_ = 0.0;
};

inline SpacetimeLift spacetime_lift(double C, double gap_exponent, double theta) {
  return SpacetimeLift(C, gap_exponent, theta);
}

}  // namespace fraclab
