#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "fraclab/analytic_bounds.hpp"
#include "fraclab/coefficients.hpp"
#include "fraclab/ensemble.hpp"
#include "fraclab/io.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/observability.hpp"
#include "fraclab/radius.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/solver.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/spectral_inequality.hpp"
#include "fraclab/telescope.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab::acceptance {

struct AcceptanceConfig {
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t seed = 1;
  double solver_dt = 4e-3;                  ///< coarsest step of the order study
  std::string observability_set = "slab";   ///< slab | empty
  bool enforce_runtime = true;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;          ///< property holds and runtime is within budget
  bool property = false;      ///< property alone
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;
};

namespace detail {

using Real50 = boost::multiprecision::cpp_bin_float_50;

inline std::string fmt(double v) { return io::format_double(v); }

// Cyclic Jacobi sweep on a dense symmetric matrix; returns all eigenvalues.
inline std::vector<Real50> jacobi_eigenvalues(std::vector<Real50> A, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> Real50& { return A[i * n + j]; };
  const Real50 eps("1e-45");
  for (int sweep = 0; sweep < 100; ++sweep) {
    Real50 off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < eps * eps) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (at(p, q) == 0) continue;
        const Real50 tau = (at(q, q) - at(p, p)) / (2 * at(p, q));
        const Real50 t = (tau >= 0 ? 1 : -1) / (abs(tau) + sqrt(1 + tau * tau));
        const Real50 c = 1 / sqrt(1 + t * t), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const Real50 akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Real50 apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<Real50> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  return ev;
}

// lambda_min of the band-limited concentration Gram matrix, 50 digits.
// G_ab = g(m_b - m_a) with g(d) = sum_{x in E} (h/P)^dim exp(2 pi i d.x / P);
// the Hermitian matrix is diagonalized through its real 2n x 2n embedding.
inline double reference_lambda_min(const ThickSet& E, double N) {
  const auto& grid = E.grid();
  const auto modes = band_modes(grid, N);
  const std::size_t n = modes.size();
  const Real50 pi = boost::math::constants::pi<Real50>();
  const Real50 w = pow(Real50(1) / grid.points, grid.dim);
  std::map<std::pair<int, int>, std::pair<Real50, Real50>> g;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const auto ma = grid.modes(modes[a]), mb = grid.modes(modes[b]);
      const std::pair<int, int> d{mb[0] - ma[0], mb[1] - ma[1]};
      if (g.count(d)) continue;
      Real50 re = 0, im = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!E.contains(i)) continue;
        const long j0 = grid.dim == 1 ? long(i) : long(i / grid.points);
        const long j1 = grid.dim == 1 ? 0 : long(i % grid.points);
        const Real50 phase = 2 * pi * Real50(d.first * j0 + d.second * j1) / grid.points;
        re += cos(phase);
        im += sin(phase);
      }
      g[d] = {re * w, im * w};
    }
  }
  const std::size_t m = 2 * n;
  std::vector<Real50> A(m * m);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const auto ma = grid.modes(modes[a]), mb = grid.modes(modes[b]);
      const auto& [re, im] = g[{mb[0] - ma[0], mb[1] - ma[1]}];
      A[a * m + b] = re;
      A[(a + n) * m + (b + n)] = re;
      A[a * m + (b + n)] = -im;
      A[(a + n) * m + b] = im;
    }
  }
  const auto ev = jacobi_eigenvalues(std::move(A), m);
  return static_cast<double>(*std::min_element(ev.begin(), ev.end()));
}

inline CriterionResult spectral_exactness(const AcceptanceConfig& cfg) {
  CriterionResult r{1, "spectral exactness", false, false, "", 0.0, 5.0};
  const GridSpec grids[] = {{1, 256, 2.0 * std::numbers::pi},
                            {2, 64, 2.0 * std::numbers::pi},
                            {2, 128, 2.0 * std::numbers::pi},
                            {2, 256, 2.0 * std::numbers::pi}};
  double worst_roundtrip = 0.0, worst_semigroup = 0.0;
  for (int f = 0; f < 100; ++f) {
    const GridSpec& grid = grids[f % 4];
    CounterRng rng(cfg.seed, 1000 + f);
    std::vector<Complex> x(grid.size());
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    const auto c = transform(grid, std::span<const Complex>(x));
    const auto back = inverse(c);
    double diff = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff = std::max(diff, std::abs(back[i] - x[i]));
      peak = std::max(peak, std::abs(x[i]));
    }
    worst_roundtrip = std::max(worst_roundtrip, diff / peak);

    const double s = 1.0 + 0.5 * (f % 3 + 1) / 1.5;  // 1.33, 1.67, 2
    const double N = (0.1 + 0.8 * rng.uniform()) * grid.nyquist();
    const double t = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
    const auto high = project(c, N, Side::high);
    const double lhs = l2_norm(semigroup_apply(high, s, t));
    const double rhs = std::exp(-t * std::pow(N, s)) * l2_norm(high);
    if (rhs > 0.0) worst_semigroup = std::max(worst_semigroup, lhs / rhs - 1.0);
  }
  r.property = worst_roundtrip <= 1e-12 && worst_semigroup <= 1e-12;
  r.detail = "max round-trip rel err " + fmt(worst_roundtrip) +
             "; max semigroup excess over C=1 " + fmt(worst_semigroup);
  return r;
}

inline CriterionResult norm_sandwich(const AcceptanceConfig& cfg) {
  CriterionResult r{2, "strip/weighted norm sandwich (1D)", false, false, "", 0.0, 10.0};
  const GridSpec grid{1, 128, 2.0 * std::numbers::pi};
  const double sigmas[] = {0.1, 0.25, 0.5};
  double worst_upper = 0.0, worst_lower = 0.0;
  for (int f = 0; f < 100; ++f) {
    CounterRng rng(cfg.seed, 2000 + f);
    const auto u = random_band_limited(grid, 16, rng);
    for (double sigma : sigmas) {
      const double strip = strip_sup_norm(u, sigma, 41);
      worst_upper = std::max(
          worst_upper, strip / weighted_fourier_norm(u, NormWeight::exp_linear(sigma)));
      worst_lower = std::max(worst_lower,
                             weighted_fourier_norm(u, NormWeight::exp_linear(0.5 * sigma)) /
                                 (2.0 * strip));
    }
  }
  r.property = worst_upper <= 1.0 + 1e-12 && worst_lower <= 1.0 + 1e-12;
  r.detail = "max strip/weighted " + fmt(worst_upper) +
             "; max weighted(sigma/2)/(2 strip) " + fmt(worst_lower);
  return r;
}

inline CriterionResult solver_order(const AcceptanceConfig& cfg) {
  CriterionResult r{3, "solver convergence order", false, false, "", 0.0, 10.0};
  const GridSpec grid{1, 128, 2.0 * std::numbers::pi};
  const double s = 2.0, T = 1.0, c = 0.5;
  const auto a = constant_coefficient(grid, c);
  CounterRng rng(cfg.seed, 3000);
  const auto u0 = random_band_limited(grid, 40, rng);
  auto exact = semigroup_apply(u0, s, T);
  exact *= std::exp(c * T);
  std::map<Scheme, std::vector<double>> err;
  SimulateOptions opt;
  opt.keep_states = false;
  for (Scheme scheme : {Scheme::etd1, Scheme::etd2}) {
    opt.scheme = scheme;
    for (double dt : {cfg.solver_dt, cfg.solver_dt / 2, cfg.solver_dt / 4}) {
      SpectralField u = u0;
      const auto steps = static_cast<long>(std::llround(T / dt));
      const EtdStepper stepper(a, s, dt, scheme);
      for (long n = 0; n < steps; ++n) u = stepper.advance(u, n * dt);
      SpectralField d = u;
      d -= exact;
      err[scheme].push_back(l2_norm(d));
    }
  }
  auto ratios = [&](Scheme sc) {
    const auto& e = err[sc];
    return std::vector<double>{e[0] / e[1], e[1] / e[2]};
  };
  const auto r1 = ratios(Scheme::etd1), r2 = ratios(Scheme::etd2);
  bool ok = true;
  for (double q : r1) ok = ok && q >= 1.8 && q <= 2.2;
  for (double q : r2) ok = ok && q >= 3.6 && q <= 4.4;
  const double final_err = err[Scheme::etd2].back();
  ok = ok && final_err <= 1e-6;
  r.property = ok;
  r.detail = "dt0 " + fmt(cfg.solver_dt) + "; ETD1 ratios " + fmt(r1[0]) + ", " + fmt(r1[1]) +
             "; ETD2 ratios " + fmt(r2[0]) + ", " + fmt(r2[1]) + "; ETD2 final error " +
             fmt(final_err);
  return r;
}

inline CriterionResult energy(const AcceptanceConfig& cfg) {
  CriterionResult r{4, "energy certificate", false, false, "", 0.0, 30.0};
  const GridSpec grid{1, 64, 2.0 * std::numbers::pi};
  const auto a = cosine_coefficient(grid, 1.0, 1);
  const EnsembleSpec ens{100, cfg.seed, 8, 0.3};
  std::vector<EnergyReport> reps(ens.count);
  parallel_for(ens.count, [&](int m) {
    SimulateOptions opt;
    opt.record_every = 10;
    opt.keep_states = false;
    reps[m] = energy_certificate(simulate(ens.member(grid, m), a, 1.5, 1.0, 1e-3, opt), a, 1e-6);
  });
  double worst = 0.0;
  int failures = 0;
  for (const auto& e : reps) {
    worst = std::max(worst, e.worst_ratio);
    failures += e.pass ? 0 : 1;
  }
  r.property = failures == 0;
  r.detail = "members 100; failures " + std::to_string(failures) + "; worst ratio " + fmt(worst);
  return r;
}

inline CriterionResult ls_constants(const AcceptanceConfig&) {
  CriterionResult r{5, "Logvinenko-Sereda constants", false, false, "", 0.0, 20.0};
  const double two_pi = 2.0 * std::numbers::pi;
  // Full torus: C = 1.
  const GridSpec wide{1, 256, two_pi};
  const auto full = build_set(wide, ExplicitMask{std::vector<std::uint8_t>(256, 1), two_pi});
  double full_dev = 0.0;
  for (int N = 0; N <= 32; ++N)
    full_dev = std::max(full_dev, std::abs(ls_constant(full, N).constant - 1.0));

  // Half-torus slab on the unit torus, N = 0..64: monotone in N.
  const GridSpec unit{1, 256, 1.0};
  const auto half = build_set(unit, PeriodicSlab{0.5, 1.0});
  std::vector<double> Ns;
  for (int N = 0; N <= 64; ++N) Ns.push_back(N);
  const auto rep = ls_growth_fit(half, Ns);
  int drops = 0;
  for (std::size_t i = 1; i < rep.constants.size(); ++i)
    if (rep.constants[i].constant < rep.constants[i - 1].constant * (1.0 - 1e-10)) ++drops;

  // Half-torus slab on [0, 2 pi), N <= 8: 50-digit reference eigenvalues.
  const auto half_wide = build_set(wide, PeriodicSlab{0.5, two_pi});
  double oracle_err = 0.0;
  for (int N = 0; N <= 8; ++N) {
    const double ref = 1.0 / reference_lambda_min(half_wide, N);
    const double got = ls_constant(half_wide, N).constant;
    oracle_err = std::max(oracle_err, std::abs(got - ref) / ref);
  }
  r.property = full_dev <= 1e-10 && drops == 0 && oracle_err <= 1e-8;
  r.detail = "full-torus max |C-1| " + fmt(full_dev) + "; monotonicity drops " +
             std::to_string(drops) + "; max rel err vs 50-digit reference " + fmt(oracle_err) +
             "; log C(N) fit slope " + fmt(rep.fit.slope) + " residual " + fmt(rep.fit.residual) +
             " (periodic model)";
  return r;
}

// Simulates the radius/envelope ensemble on [0, 5] with 0.5 cos(x), s = 1.5.
inline std::vector<Trajectory> radius_ensemble(const AcceptanceConfig& cfg, int members,
                                               bool keep_states) {
  const GridSpec grid{1, 64, 2.0 * std::numbers::pi};
  const auto a = cosine_coefficient(grid, 0.5, 1);
  const EnsembleSpec ens{members, cfg.seed, 8, 0.3};
  std::vector<Trajectory> trajs(members);
  parallel_for(members, [&](int m) {
    SimulateOptions opt;
    opt.record_every = 25;
    opt.track_radius = !keep_states;
    opt.keep_states = keep_states;
    trajs[m] = simulate(ens.member(grid, m), a, 1.5, 5.0, 2e-3, opt);
  });
  return trajs;
}

inline CriterionResult radius_persistence(const AcceptanceConfig& cfg) {
  CriterionResult r{6, "analytic radius persistence", false, false, "", 0.0, 60.0};
  const auto trajs = radius_ensemble(cfg, 100, false);
  double lo = kInfinity, hi = 0.0;
  int non_finite = 0;
  for (const auto& tr : trajs) {
    for (const auto& d : tr.diagnostics) {
      if (d.t < 0.1 - 1e-12) continue;
      if (!std::isfinite(d.radius_estimate)) {
        ++non_finite;
        continue;
      }
      lo = std::min(lo, d.radius_estimate);
      hi = std::max(hi, d.radius_estimate);
    }
  }
  r.property = non_finite == 0 && lo >= 0.2 && std::isfinite(hi);
  r.detail = "members 100; min radius " + fmt(lo) + "; max radius " + fmt(hi) +
             "; non-finite estimates " + std::to_string(non_finite);
  return r;
}

inline CriterionResult ultra_analytic_envelope(const AcceptanceConfig& cfg) {
  CriterionResult r{7, "ultra-analytic envelope", false, false, "", 0.0, 60.0};
  const auto trajs = radius_ensemble(cfg, 20, true);
  const auto weight = NormWeight::exp_loglog(0.3, 0.0);
  std::vector<double> ts, vs;
  bool finite = true;
  const auto& times = trajs.front().times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] <= 0.0) continue;
    double v = 0.0;
    for (const auto& tr : trajs) v = std::max(v, weighted_fourier_norm(tr.states[i], weight));
    finite = finite && std::isfinite(v);
    ts.push_back(times[i]);
    vs.push_back(v);
  }
  if (!finite) {
    r.detail = "weighted norm not finite at some recorded time";
    return r;
  }
  const auto fit = envelope_fit(ts, vs, 1.5);
  r.property = fit.min_residual >= 0.0 && std::isfinite(fit.K);
  r.detail = "members 20; max norm " + fmt(*std::max_element(vs.begin(), vs.end())) +
             "; envelope K " + fmt(fit.K) + "; min log residual " + fmt(fit.min_residual);
  return r;
}

inline CriterionResult telescoping(const AcceptanceConfig&) {
  CriterionResult r{8, "telescoping arithmetic", false, false, "", 0.0, 1.0};
  const auto base = telescope_constant({1.0, 0.5, 1.0, 1.0});
  const bool lambda_ok = std::abs(base.lambda - 0.75) <= 1e-15;
  const bool closed_ok = std::abs(base.closed_form / std::exp(4.0) - 1.0) <= 1e-14;
  int violations = 0, points = 0;
  double worst = -kInfinity;
  const double Cs[] = {1.0, 2.0, 4.0, 8.0};
  const double thetas[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  const std::pair<double, double> shapes[] = {{0.5, 1.0}, {1.0, 1.0}, {2.0, 1.0},
                                              {1.0, 0.5}, {1.0, 0.25}};
  for (double C : Cs)
    for (double th : thetas)
      for (const auto& [delta, T] : shapes) {
        const auto tc = telescope_constant({C, th, delta, T});
        ++points;
        const double log_q = tc.log_series_value - tc.log_closed_form;
        worst = std::max(worst, log_q);
        if (!(log_q <= 1e-12)) ++violations;
      }
  r.property = lambda_ok && closed_ok && violations == 0;
  r.detail = "lambda " + fmt(base.lambda) + "; closed form " + fmt(base.closed_form) +
             "; series at base point " + fmt(base.series_value) + "; series > closed form at " +
             std::to_string(violations) + "/" + std::to_string(points) +
             " grid points, worst log(series/closed) " + fmt(worst);
  return r;
}

inline CriterionResult observability(const AcceptanceConfig& cfg) {
  CriterionResult r{9, "end-to-end observability", false, false, "", 0.0, 120.0};
  const GridSpec grid{1, 64, 2.0 * std::numbers::pi};
  const double L = 0.5 * std::numbers::pi;
  const ThickSet E = cfg.observability_set == "empty"
                         ? build_set(grid, ExplicitMask{std::vector<std::uint8_t>(64, 0), L})
                         : build_set(grid, PeriodicSlab{0.5, L});
  const auto a = cosine_coefficient(grid, 1.0, 1);
  ObservabilitySettings st;
  st.s = 1.5;
  st.dt = 1e-3;
  st.ensemble = EnsembleSpec{20, cfg.seed, 8, 0.3};
  const auto scan = observability_scan(a, E, {0.25, 0.5, 1.0, 2.0}, st);
  std::ostringstream d;
  bool finite = true, bounded = true, monotone = true;
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const auto& row = scan.rows[i];
    d << (i ? "; " : "") << "T=" << fmt(row.T) << " ratio " << fmt(row.empirical_ratio)
      << " bound " << fmt(row.telescoped_bound);
    if (row.infinite) {
      d << " (infinite: member " << row.offending_member << ", seed " << row.offending_seed
        << ")";
      finite = false;
    }
    bounded = bounded && row.pass;
    // rows are sorted by T, so 1/T^{s-1} decreases along them
    if (i > 0 && !(row.empirical_ratio <= scan.rows[i - 1].empirical_ratio * (1.0 + 1e-12)))
      monotone = false;
  }
  d << "; C_interp " << fmt(scan.constants.C_interp) << ", C0 " << fmt(scan.constants.C0);
  if (finite && !monotone) d << "; log-ratio not monotone in 1/T^(s-1)";
  r.property = finite && monotone && bounded;
  r.detail = d.str();
  return r;
}

inline CriterionResult h_s_bound(const AcceptanceConfig&) {
  CriterionResult r{10, "h_s derivative bound", false, false, "", 0.0, 10.0};
  std::ostringstream d;
  bool ok = true;
  for (double s : {1.0, 2.0}) {
    const auto rep = h_s_derivative_check(s, 8);
    ok = ok && rep.pass && std::isfinite(rep.K);
    d << (s == 1.0 ? "" : "; ") << "s=" << fmt(s) << " K " << fmt(rep.K)
      << " periodization error " << fmt(rep.derivative_error) << " (period "
      << fmt(rep.period) << ")";
  }
  r.property = ok;
  r.detail = d.str();
  return r;
}

}  // namespace detail

/// Runs the selected criteria in order; each result records its wall time.
inline std::vector<CriterionResult> run(const AcceptanceConfig& cfg) {
  using Fn = std::function<CriterionResult(const AcceptanceConfig&)>;
  const std::map<int, Fn> table{
      {1, detail::spectral_exactness}, {2, detail::norm_sandwich},
      {3, detail::solver_order},       {4, detail::energy},
      {5, detail::ls_constants},       {6, detail::radius_persistence},
      {7, detail::ultra_analytic_envelope}, {8, detail::telescoping},
      {9, detail::observability},      {10, detail::h_s_bound}};
  std::vector<CriterionResult> out;
  for (int id : cfg.criteria) {
    auto it = table.find(id);
    fraclab::detail::require(it != table.end(),
                             "unknown acceptance criterion " + std::to_string(id));
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = it->second(cfg);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.pass = r.property && (!cfg.enforce_runtime || r.seconds < r.budget);
    if (r.property && !r.pass) r.detail += "; runtime over budget";
    out.push_back(r);
  }
  return out;
}

/// One line per criterion: "[PASS] 3 solver convergence order (0.41 s / 10 s): ...".
inline std::string format_line(const CriterionResult& r) {
  std::ostringstream o;
  char secs[64];
  std::snprintf(secs, sizeof secs, "%.2f s / %g s", r.seconds, r.budget);
  o << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << " (" << secs
    << "): " << r.detail;
  return o.str();
}

}  // namespace fraclab::acceptance
