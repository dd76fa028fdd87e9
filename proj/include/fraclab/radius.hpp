#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fraclab/error.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// Wavenumber range used by the decay fit; max_k < 0 means
/// 0.66 * Nyquist.
struct FitWindow {
  double min_k = 2.0;
  double max_k = -1.0;
};

struct RadiusEstimate {
  enum class Status { fitted, band_limited };

  double sigma = 0.0;     ///< fitted exponential decay rate, clipped at 0
  double residual = 0.0;  ///< RMS residual of the log-linear fit
  int shells_used = 0;
  Status status = Status::fitted;
};

/// Jump across one shell (amplitude ratio) that marks a compact spectrum.
inline constexpr double kCliffRatio = 1e6;

/// Exponential decay rate of |c_k|: least-squares slope of -log max_{shell}|c|
/// against |k| over the fit window, ignoring shells below `floor`.  A nonpositive
/// floor selects 1e-13 * max|c|.  Shells are the integer lattice radii
/// round(|m|).  When the spectrum drops below the floor inside the window
/// before three shells are usable the field is reported as band-limited with
/// the rate capped at log(max|c| / floor) per lattice step; the same happens
/// when the spectrum drops from above kCliffRatio * floor to below the floor
/// between neighbouring shells.
inline RadiusEstimate radius_estimate(const SpectralField& f, double floor = -1.0,
                                      FitWindow window = {}) {
  const auto& grid = f.grid();
  double peak = 0.0;
  for (auto c : f.coeffs()) peak = std::max(peak, std::abs(c));
  if (peak == 0.0) throw NumericalError("insufficient decay data: zero field");
  if (floor <= 0.0) floor = 1e-13 * peak;
  const double kmax = window.max_k < 0.0 ? 0.66 * grid.nyquist() : window.max_k;

  // shell -> (largest |c|, |k| of that mode)
  std::map<long, std::pair<double, double>> shells;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double k = grid.wavenumber(i);
    if (k < window.min_k - 1e-12 || k > kmax + 1e-12) continue;
    const long shell = std::lround(k / grid.frequency_step());
    auto& slot = shells[shell];
    const double a = std::abs(f[i]);
    if (a >= slot.first) slot = {a, k};
  }
  std::vector<double> xs, ys;
  bool dropped = false, cliff = false;
  double previous = 0.0;  // amplitude of the preceding shell in the window
  for (const auto& [shell, v] : shells) {
    if (v.first > floor) {
      xs.push_back(v.second);
      ys.push_back(-std::log(v.first));
    } else {
      dropped = true;
      // A compact spectrum falls from far above the floor to below it in one
      // shell; decaying spectra approach the floor gradually.
      if (previous > kCliffRatio * floor) cliff = true;
    }
    previous = v.first;
  }
  RadiusEstimate out;
  out.shells_used = static_cast<int>(xs.size());
  if (cliff || xs.size() < 3) {
    if (!dropped)
      throw NumericalError("insufficient decay data: fewer than 3 usable shells");
    out.status = RadiusEstimate::Status::band_limited;
    out.sigma = std::log(peak / floor) / grid.frequency_step();
    return out;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    ss += r * r;
  }
  out.residual = std::sqrt(ss / n);
  out.sigma = std::max(slope, 0.0);
  return out;
}

}  // namespace fraclab
