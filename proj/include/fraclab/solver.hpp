#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fraclab/coefficients.hpp"
#include "fraclab/error.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/radius.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab {

enum class Scheme { etd1, etd2 };

/// phi_1(z) = (e^z - 1) / z with phi_1(0) = 1.
inline double phi1(double z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return std::expm1(z) / z;
}

/// phi_2(z) = (e^z - 1 - z) / z^2 with phi_2(0) = 1/2.
inline double phi2(double z) {
  if (std::abs(z) < 1e-2)
    return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 +
                                                          z * (1.0 / 720.0 + z / 5040.0))));
  return (std::expm1(z) - z) / (z * z);
}

/// Exponential time differencing for u_t = -Lambda^s u + a u with a fixed
/// step: ETD1 is exponential Euler, ETD2 the two-stage Cox-Matthews
/// Runge-Kutta variant (predictor by ETD1, corrector with phi_2).
class EtdStepper {
 public:
  EtdStepper(const CoefficientField& a, double s, double dt, Scheme scheme)
      : a_(&a), s_(s), dt_(dt), scheme_(scheme) {
    detail::require(s > 1.0, "fractional order s must exceed 1");
    detail::require(dt > 0.0 && std::isfinite(dt), "time step must be positive");
    const auto& grid = a.grid;
    decay_.resize(grid.size());
    phi1_.resize(grid.size());
    phi2_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double z = -dt * std::pow(grid.wavenumber(i), s);
      decay_[i] = std::exp(-dt * std::pow(grid.wavenumber(i), s));
      phi1_[i] = phi1(z);
      phi2_[i] = phi2(z);
    }
  }

  double dt() const { return dt_; }

  SpectralField advance(const SpectralField& u, double t) const {
    detail::require(u.grid() == a_->grid, "coefficient grid does not match field");
    const auto n0 = nonlinear(u, t);
    SpectralField next(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i)
      next[i] = decay_[i] * u[i] + dt_ * phi1_[i] * n0[i];
    if (scheme_ == Scheme::etd2) {
      const auto n1 = nonlinear(next, t + dt_);
      for (std::size_t i = 0; i < u.size(); ++i)
        next[i] += dt_ * phi2_[i] * (n1[i] - n0[i]);
    }
    return next;
  }

  /// Dealiased product a(t) u in spectral space.
  SpectralField nonlinear(const SpectralField& u, double t) const {
    const auto& samples = coefficient_samples(t);
    auto phys = inverse(dealias(u));
    for (std::size_t i = 0; i < phys.size(); ++i) phys[i] *= samples[i];
    return dealias(transform(u.grid(), std::span<const Complex>(phys)));
  }

 private:
  const std::vector<double>& coefficient_samples(double t) const {
    if (!a_->time_dependent && cached_) return *cached_;
    auto raw = a_->samples(t);
    detail::require(raw.size() == a_->grid.size(),
                    "coefficient evaluator returned the wrong sample count");
    auto filtered = inverse_real(dealias(transform(a_->grid, std::span<const double>(raw))));
    if (!a_->time_dependent) {
      cached_ = std::move(filtered);
      return *cached_;
    }
    scratch_ = std::move(filtered);
    return scratch_;
  }

  const CoefficientField* a_;
  double s_;
  double dt_;
  Scheme scheme_;
  std::vector<double> decay_, phi1_, phi2_;
  mutable std::optional<std::vector<double>> cached_;
  mutable std::vector<double> scratch_;
};

/// One step of length dt from time t.
inline SpectralField step(const SpectralField& u, const CoefficientField& a,
                          double s, double t, double dt, Scheme scheme) {
  return EtdStepper(a, s, dt, scheme).advance(u, t);
}

struct StepDiagnostics {
  double t = 0.0;
  double l2 = 0.0;
  double l2_on_E = std::numeric_limits<double>::quiet_NaN();
  double radius_estimate = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;  ///< empty unless keep_states
  std::vector<StepDiagnostics> diagnostics;
};

struct SimulateOptions {
  Scheme scheme = Scheme::etd2;
  int record_every = 1;
  const ThickSet* observe = nullptr;
  bool track_radius = false;
  bool keep_states = true;
  double t0 = 0.0;
};

/// Integrate from t0 to t0 + T; the last step is shortened to land on t0 + T.
/// Diagnostics are recorded at t0, every record_every steps, and at the end.
inline Trajectory simulate(const SpectralField& u0, const CoefficientField& a,
                           double s, double T, double dt,
                           const SimulateOptions& opt = {}) {
  detail::require(T > 0.0, "final time must be positive");
  detail::require(opt.record_every >= 1, "record_every must be positive");
  if (opt.observe)
    detail::require(opt.observe->grid() == u0.grid(),
                    "observation set grid does not match field");
  Trajectory traj;
  auto record = [&](double t, const SpectralField& u) {
    StepDiagnostics d;
    d.t = t;
    d.l2 = l2_norm(u);
    if (opt.observe) d.l2_on_E = restricted_l2(u, *opt.observe);
    if (opt.track_radius) {
      try {
        d.radius_estimate = radius_estimate(u).sigma;
      } catch (const NumericalError&) {
      }
    }
    traj.times.push_back(t);
    traj.diagnostics.push_back(d);
    if (opt.keep_states) traj.states.push_back(u);
  };

  const auto full_steps = static_cast<std::size_t>(std::floor(T / dt * (1.0 + 1e-12)));
  const double rest = T - static_cast<double>(full_steps) * dt;
  const bool partial = rest > 1e-12 * T;
  const std::size_t total = full_steps + (partial ? 1 : 0);

  const EtdStepper stepper(a, s, dt, opt.scheme);
  SpectralField u = u0;
  record(opt.t0, u);
  for (std::size_t n = 0; n < total; ++n) {
    const double t = opt.t0 + static_cast<double>(n) * dt;
    const bool last = n + 1 == total;
    if (partial && last)
      u = EtdStepper(a, s, rest, opt.scheme).advance(u, t);
    else
      u = stepper.advance(u, t);
    for (auto c : u.coeffs())
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw IntegrationFailure(n, "non-finite coefficient");
    if (last || (n + 1) % opt.record_every == 0)
      record(last ? opt.t0 + T : opt.t0 + static_cast<double>(n + 1) * dt, u);
  }
  return traj;
}

/// Composite trapezoid rule.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

/// Trapezoidal time integral of ||u(t)||_{L2(E)}^2 over the recorded cadence,
/// up to (and including) the recorded time t_end.
inline double observed_energy(const Trajectory& traj, double t_end) {
  std::vector<double> ts, fs;
  for (const auto& d : traj.diagnostics) {
    if (d.t > t_end + 1e-12) break;
    ts.push_back(d.t);
    fs.push_back(d.l2_on_E * d.l2_on_E);
  }
  return trapezoid(ts, fs);
}

struct EnergyReport {
  bool pass = false;
  double growth_rate = 0.0;  ///< sup_t ||a(t)||_inf over recorded times
  double worst_ratio = 0.0;  ///< max ||u2||^2 / (e^{2A(t2-t1)} ||u1||^2)
};

/// Checks ||u(t2)||^2 <= exp(2 sup|a| (t2 - t1)) ||u(t1)||^2 (1 + slack) for
/// every recorded pair t1 < t2.
inline EnergyReport energy_certificate(const Trajectory& traj,
                                       const CoefficientField& a, double slack) {
  detail::require(!traj.diagnostics.empty(), "trajectory is empty");
  EnergyReport rep;
  if (a.time_dependent) {
    for (double t : traj.times) rep.growth_rate = std::max(rep.growth_rate, sup_abs(a.samples(t)));
  } else {
    rep.growth_rate = sup_abs(a.samples(traj.times.front()));
  }
  // ratio(i, j) = g_j / g_i with g = ||u||^2 exp(-2A (t - t_0)), so the worst
  // pair pairs each g_j with the smallest earlier g_i.
  const auto& d = traj.diagnostics;
  const double t_first = d.front().t;
  auto g = [&](std::size_t i) {
    return d[i].l2 * d[i].l2 * std::exp(-2.0 * rep.growth_rate * (d[i].t - t_first));
  };
  double least = g(0);
  for (std::size_t j = 1; j < d.size(); ++j) {
    const double gj = g(j);
    const double ratio =
        least > 0.0 ? gj / least : (gj == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    least = std::min(least, gj);
  }
  rep.pass = rep.worst_ratio <= 1.0 + slack;
  return rep;
}

}  // namespace fraclab
