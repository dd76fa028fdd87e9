#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fraclab/coefficients.hpp"
#include "fraclab/ensemble.hpp"
#include "fraclab/error.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/solver.hpp"
#include "fraclab/telescope.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// ||u_t||^2 / ( ||u_t||_E^{2 theta} ||u_0||^{2(1-theta)} ); +inf when the
/// denominator vanishes.
inline double interp_ratio(double ut_norm, double ut_on_E, double u0_norm, double theta) {
  detail::require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
  const double num = ut_norm * ut_norm;
  const double den = std::pow(ut_on_E * ut_on_E, theta) *
                     std::pow(u0_norm * u0_norm, 1.0 - theta);
  if (den == 0.0) return num == 0.0 ? 0.0 : kInfinity;
  return num / den;
}

inline double interp_ratio(const SpectralField& u_t, double u0_norm, const ThickSet& E,
                           double theta) {
  return interp_ratio(l2_norm(u_t), restricted_l2(u_t, E), u0_norm, theta);
}

struct ObservabilitySettings {
  double s = 1.5;
  double dt = 1e-3;
  double theta = 0.5;
  Scheme scheme = Scheme::etd2;
  EnsembleSpec ensemble;
  int pair_points = 101;  ///< time samples on [0, 1] used for constant fitting
};

struct ObservabilityRow {
  double T = 0.0;
  double empirical_ratio = 0.0;  ///< max_member ||u(T)||^2 / int_0^T ||u||_E^2
  int worst_member = -1;
  double closed_form = 0.0;
  double series_value = 0.0;
  double telescoped_bound = 0.0;
  bool infinite = false;
  int offending_member = -1;     ///< member whose observation vanished
  std::uint64_t offending_seed = 0;
  bool pass = false;
};

/// Measured constants of the telescoping pipeline (shared by all horizons).
struct MeasuredConstants {
  double C_energy = 1.0;  ///< max ||u(t2)||^2 / ||u(t1)||^2 on [0, 1]
  double C_interp = 1.0;  ///< smallest C >= 1 with ratio <= C e^{C / gap^delta}
  double C_lift = 1.0;    ///< C_energy * C_interp fed to the space-time lift
  double C0 = 1.0;        ///< absorbed constant after the lift
  double growth_rate = 0.0;
  double gap_exponent = 0.0;
  double lambda = 0.0;
};

struct ObservabilityScan {
  MeasuredConstants constants;
  std::vector<ObservabilityRow> rows;
  std::vector<std::vector<double>> member_ratios;  ///< [row][member]
};

namespace detail {

// Smallest C >= 1 with log C + C g_i >= y_i for every (g_i = gap^-delta, y_i).
inline double fit_interp_constant(const std::vector<std::pair<double, double>>& pts) {
  auto ok = [&](double C) {
    const double lc = std::log(C);
    for (const auto& [g, y] : pts)
      if (lc + C * g < y) return false;
    return true;
  };
  for (const auto& p : pts)
    if (!std::isfinite(p.second)) return kInfinity;
  if (ok(1.0)) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) return kInfinity;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline std::size_t find_time(const Trajectory& traj, double T) {
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    if (std::abs(traj.times[i] - T) <= 1e-9 * std::max(1.0, T)) return i;
  throw InvalidArgument("horizon is not a whole number of time steps");
}

}  // namespace detail

/// Observability experiment over several horizons sharing one ensemble.
///
/// Each member is simulated to max(1, max T).  The empirical ratio is the
/// ensemble max of ||u(T)||^2 / int_0^T ||u||_E^2 dt (trapezoid).  The bound
/// comes from measured constants: the energy constant and the final-time
/// interpolation constant over pairs 0 <= t1 < t2 <= 1, lifted to the
/// space-time form and telescoped with gap exponent s - 1; horizons beyond 1
/// append the energy growth exp(2 sup|a| (T - 1)).
inline ObservabilityScan observability_scan(const CoefficientField& a, const ThickSet& E,
                                            std::vector<double> T_list,
                                            const ObservabilitySettings& cfg) {
  detail::require(!T_list.empty(), "no horizons given");
  detail::require(cfg.ensemble.count >= 1, "ensemble must not be empty");
  detail::require(cfg.theta > 0.0 && cfg.theta < 1.0, "theta must lie in (0, 1)");
  detail::require(cfg.pair_points >= 2, "pair_points must be at least 2");
  for (double T : T_list) {
    detail::require(T > 0.0, "horizons must be positive");
    const double steps = T / cfg.dt;
    detail::require(std::abs(steps - std::round(steps)) < 1e-6,
                    "each horizon must be a whole number of time steps");
  }
  std::sort(T_list.begin(), T_list.end());
  const double horizon = std::max(1.0, T_list.back());
  const GridSpec& grid = E.grid();
  const int members = cfg.ensemble.count;
  const double delta = cfg.s - 1.0;

  std::vector<Trajectory> trajs(members);
  parallel_for(members, [&](int m) {
    SimulateOptions opt;
    opt.scheme = cfg.scheme;
    opt.observe = &E;
    opt.keep_states = false;
    trajs[m] = simulate(cfg.ensemble.member(grid, m), a, cfg.s, horizon, cfg.dt, opt);
  });

  ObservabilityScan out;
  auto& K = out.constants;
  K.gap_exponent = delta;
  K.growth_rate = sup_abs(a.samples(0.0));
  if (a.time_dependent)
    for (double t : trajs.front().times)
      K.growth_rate = std::max(K.growth_rate, sup_abs(a.samples(t)));

  // Pairs on [0, 1] for the energy and interpolation constants.
  std::vector<std::pair<double, double>> pts;
  for (const auto& tr : trajs) {
    std::vector<std::size_t> idx;
    for (int p = 0; p < cfg.pair_points; ++p) {
      const double t = static_cast<double>(p) / (cfg.pair_points - 1);
      std::size_t best = 0;
      for (std::size_t i = 0; i < tr.times.size(); ++i)
        if (std::abs(tr.times[i] - t) < std::abs(tr.times[best] - t)) best = i;
      if (idx.empty() || idx.back() != best) idx.push_back(best);
    }
    const auto& d = tr.diagnostics;
    for (std::size_t j = 1; j < idx.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const auto& d1 = d[idx[i]];
        const auto& d2 = d[idx[j]];
        const double gap = d2.t - d1.t;
        K.C_energy = std::max(K.C_energy, (d2.l2 * d2.l2) / (d1.l2 * d1.l2));
        const double r = interp_ratio(d2.l2, d2.l2_on_E, d1.l2, cfg.theta);
        pts.emplace_back(std::pow(gap, -delta), std::log(r));
      }
    }
  }
  K.C_interp = detail::fit_interp_constant(pts);
  K.C_lift = K.C_energy * K.C_interp;

  TelescopeConstant at_one{};
  const bool finite_constants = std::isfinite(K.C_lift);
  if (finite_constants) {
    const auto lift = spacetime_lift(K.C_lift, delta, cfg.theta);
    K.C0 = std::max(1.0, lift.absorbed_constant());
    at_one = telescope_constant({K.C0, cfg.theta, delta, 1.0});
    K.lambda = at_one.lambda;
  } else {
    K.C0 = kInfinity;
  }

  for (double T : T_list) {
    ObservabilityRow row;
    row.T = T;
    std::vector<double> ratios(members);
    for (int m = 0; m < members; ++m) {
      const auto& tr = trajs[m];
      const auto i = detail::find_time(tr, T);
      const double num = tr.diagnostics[i].l2 * tr.diagnostics[i].l2;
      const double den = observed_energy(tr, tr.times[i]);
      ratios[m] = den > 0.0 ? num / den : kInfinity;
      if (!std::isfinite(ratios[m]) && !row.infinite) {
        row.infinite = true;
        row.offending_member = m;
        row.offending_seed = cfg.ensemble.seed;
      }
      if (ratios[m] >= row.empirical_ratio) {
        row.empirical_ratio = ratios[m];
        row.worst_member = m;
      }
    }
    out.member_ratios.push_back(ratios);
    if (finite_constants) {
      const auto tc = telescope_constant({K.C0, cfg.theta, delta, std::min(T, 1.0)});
      row.closed_form = tc.closed_form;
      row.series_value = tc.series_value;
      row.telescoped_bound = tc.series_value;
      if (T > 1.0)
        row.telescoped_bound =
            at_one.series_value * std::exp(2.0 * K.growth_rate * (T - 1.0));
    } else {
      row.closed_form = row.series_value = row.telescoped_bound = kInfinity;
    }
    row.pass = !row.infinite && std::isfinite(row.telescoped_bound) &&
               row.empirical_ratio <= row.telescoped_bound;
    out.rows.push_back(row);
  }
  return out;
}

inline ObservabilityRow observability_experiment(const CoefficientField& a,
                                                 const ThickSet& E, double T,
                                                 const ObservabilitySettings& cfg) {
  return observability_scan(a, E, {T}, cfg).rows.front();
}

struct InterpScanRow {
  double theta = 0.0;
  double t = 0.0;
  double max_ratio = 0.0;  ///< ensemble max of the interpolation ratio
};

/// Ensemble maxima of the interpolation ratio at times t and exponents theta.
inline std::vector<InterpScanRow> interp_scan(const CoefficientField& a, const ThickSet& E,
                                              const std::vector<double>& t_list,
                                              const std::vector<double>& theta_list,
                                              const ObservabilitySettings& cfg) {
  detail::require(!t_list.empty() && !theta_list.empty(), "empty scan");
  const double horizon = *std::max_element(t_list.begin(), t_list.end());
  for (double t : t_list) {
    const double steps = t / cfg.dt;
    detail::require(t > 0.0 && std::abs(steps - std::round(steps)) < 1e-6,
                    "scan times must be positive whole numbers of time steps");
  }
  const int members = cfg.ensemble.count;
  std::vector<Trajectory> trajs(members);
  parallel_for(members, [&](int m) {
    SimulateOptions opt;
    opt.scheme = cfg.scheme;
    opt.observe = &E;
    opt.keep_states = false;
    trajs[m] = simulate(cfg.ensemble.member(E.grid(), m), a, cfg.s, horizon, cfg.dt, opt);
  });
  std::vector<InterpScanRow> rows;
  for (double theta : theta_list) {
    for (double t : t_list) {
      InterpScanRow row{theta, t, 0.0};
      for (const auto& tr : trajs) {
        const auto& d = tr.diagnostics[detail::find_time(tr, t)];
        row.max_ratio = std::max(
            row.max_ratio, interp_ratio(d.l2, d.l2_on_E, tr.diagnostics.front().l2, theta));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace fraclab
