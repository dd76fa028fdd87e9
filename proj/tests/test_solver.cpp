#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fraclab/coefficients.hpp"
#include "fraclab/ensemble.hpp"
#include "fraclab/error.hpp"
#include "fraclab/solver.hpp"

using namespace fraclab;

namespace {

constexpr double kPi = std::numbers::pi;
const GridSpec k1D{1, 64, 2 * kPi};

// Exact solution for constant a = c: each mode scales by exp((c - |k|^s) t).
SpectralField constant_exact(const SpectralField& u0, double c, double s, double t) {
  return apply_radial_multiplier(u0, [&](double k) { return std::exp((c - std::pow(k, s)) * t); });
}

double diff_norm(const SpectralField& a, const SpectralField& b) { return l2_norm(a - b); }

}  // namespace

TEST(Phi, StableBranches) {
  EXPECT_EQ(phi1(0.0), 1.0);
  EXPECT_EQ(phi2(0.0), 0.5);
  for (double z : {-1e-5, -5e-5, -2e-3, -0.5, -3.0, -50.0}) {
    const long double zl = z;
    const long double p1 = (std::expm1(zl)) / zl;
    const long double p2 = (std::expm1(zl) - zl) / (zl * zl);
    EXPECT_NEAR(phi1(z), static_cast<double>(p1), 1e-13);
    EXPECT_NEAR(phi2(z), static_cast<double>(p2), 1e-9);
  }
  // Both sides of each branch switch agree with the extended-precision formula.
  for (double z : {-0.99999e-4, -1.00001e-4})
    EXPECT_NEAR(phi1(z), static_cast<double>(std::expm1((long double)z) / z), 1e-15);
  for (double z : {-0.99999e-2, -1.00001e-2}) {
    const long double zl = z;
    EXPECT_NEAR(phi2(z), static_cast<double>((std::expm1(zl) - zl) / (zl * zl)), 1e-13);
  }
}

TEST(Step, ZeroCoefficientIsExactSemigroup) {
  CounterRng rng(1, 0);
  auto u = random_analytic(k1D, 0.1, rng);
  const auto a = zero_coefficient(k1D);
  for (auto scheme : {Scheme::etd1, Scheme::etd2}) {
    auto v = step(u, a, 1.5, 0.0, 0.01, scheme);
    auto w = semigroup_apply(u, 1.5, 0.01);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(v[i], w[i]);
  }
}

TEST(Step, RejectsBadParameters) {
  auto u = unit_mode(k1D, 1);
  const auto a = zero_coefficient(k1D);
  EXPECT_THROW(step(u, a, 1.5, 0.0, 0.0, Scheme::etd1), InvalidArgument);
  EXPECT_THROW(step(u, a, 1.5, 0.0, -1e-3, Scheme::etd1), InvalidArgument);
  EXPECT_THROW(step(u, a, 1.0, 0.0, 1e-3, Scheme::etd1), InvalidArgument);
  EXPECT_THROW(step(unit_mode(GridSpec{1, 32, 2 * kPi}, 1), a, 1.5, 0.0, 1e-3, Scheme::etd1),
               InvalidArgument);
}

TEST(Step, ConstantCoefficientSingleModeLocalError) {
  const double c = 0.7, s = 2.0;
  auto u = unit_mode(k1D, 1);
  const auto a = constant_coefficient(k1D, c);
  std::vector<double> errs;
  for (double dt : {0.02, 0.01}) {
    auto v = step(u, a, s, 0.0, dt, Scheme::etd1);
    errs.push_back(std::abs(v[v.index_of(1)] - std::exp((c - 1.0) * dt)));
  }
  // O(dt^2) local error: halving dt divides it by ~4.
  EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.1);
}

TEST(Simulate, ZeroCoefficientUnitMode) {
  auto u0 = unit_mode(k1D, 1);
  for (auto scheme : {Scheme::etd1, Scheme::etd2}) {
    SimulateOptions opt;
    opt.scheme = scheme;
    auto tr = simulate(u0, zero_coefficient(k1D), 2.0, 1.0, 0.01, opt);
    EXPECT_DOUBLE_EQ(tr.times.front(), 0.0);
    EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
    EXPECT_NEAR(std::abs(tr.states.back()[u0.index_of(1)]), std::exp(-1.0), 1e-10);
    for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
    for (std::size_t i = 0; i < u0.size(); ++i) EXPECT_EQ(tr.states.front()[i], u0[i]);
  }
}

TEST(Simulate, ShortensLastStepAndRecordsCadence) {
  SimulateOptions opt;
  opt.record_every = 3;
  auto tr = simulate(unit_mode(k1D, 2), zero_coefficient(k1D), 1.5, 0.105, 0.01, opt);
  // 10 full steps + one of 0.005; records at 0, 3, 6, 9 steps and the end.
  ASSERT_EQ(tr.times.size(), 5u);
  EXPECT_NEAR(tr.times[3], 0.09, 1e-15);
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.105);
  EXPECT_NEAR(std::abs(tr.states.back()[tr.states.back().index_of(2)]),
              std::exp(-0.105 * std::pow(2.0, 1.5)), 1e-14);
  EXPECT_THROW(simulate(unit_mode(k1D, 2), zero_coefficient(k1D), 1.5, 0.0, 0.01), InvalidArgument);
}

TEST(Simulate, ConstantCoefficientNormEtd1) {
  const double c = 0.3;
  CounterRng rng(2, 0);
  auto u0 = random_band_limited(k1D, 6, rng);
  SimulateOptions opt;
  opt.scheme = Scheme::etd1;
  const auto a = constant_coefficient(k1D, c);
  std::vector<double> errs;
  for (double dt : {0.01, 0.005}) {
    auto tr = simulate(u0, a, 2.0, 1.0, dt, opt);
    const double want = std::exp(c) * l2_norm(semigroup_apply(u0, 2.0, 1.0));
    errs.push_back(std::abs(tr.diagnostics.back().l2 - want));
  }
  EXPECT_LT(errs[0], 0.05);
  EXPECT_NEAR(errs[0] / errs[1], 2.0, 0.2);
}

TEST(Simulate, ConvergenceOrders) {
  const double c = 0.5, s = 2.0, T = 1.0;
  const GridSpec g{1, 128, 2 * kPi};
  CounterRng rng(3, 0);
  auto u0 = random_band_limited(g, 40, rng);
  const auto a = constant_coefficient(g, c);
  const auto exact = constant_exact(u0, c, s, T);
  for (auto scheme : {Scheme::etd1, Scheme::etd2}) {
    SimulateOptions opt;
    opt.scheme = scheme;
    opt.keep_states = true;
    std::vector<double> errs;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      auto tr = simulate(u0, a, s, T, dt, opt);
      errs.push_back(diff_norm(tr.states.back(), exact));
    }
    const double want = scheme == Scheme::etd1 ? 2.0 : 4.0;
    EXPECT_NEAR(errs[0] / errs[1], want, 0.1 * want);
    EXPECT_NEAR(errs[1] / errs[2], want, 0.1 * want);
    if (scheme == Scheme::etd2) EXPECT_LT(errs[2], 1e-6);
  }
}

TEST(Simulate, LinearInInitialData) {
  const auto a = cosine_coefficient(k1D, 0.5, 1);
  CounterRng r1(4, 0), r2(4, 1);
  auto u = random_analytic(k1D, 0.3, r1);
  auto v = random_band_limited(k1D, 8, r2);
  auto w = u + Complex(2.5) * v;
  auto fu = simulate(u, a, 1.5, 0.5, 0.01).states.back();
  auto fv = simulate(v, a, 1.5, 0.5, 0.01).states.back();
  auto fw = simulate(w, a, 1.5, 0.5, 0.01).states.back();
  EXPECT_LT(diff_norm(fw, fu + Complex(2.5) * fv), 1e-10 * l2_norm(fw));
}

TEST(Simulate, TimeShiftConsistency) {
  const auto a = time_cosine_coefficient(k1D, 0.8, 1, 2.0);
  CounterRng rng(5, 0);
  auto u0 = random_analytic(k1D, 0.3, rng);
  auto whole = simulate(u0, a, 1.5, 1.0, 0.01).states.back();
  auto first = simulate(u0, a, 1.5, 0.5, 0.01).states.back();
  SimulateOptions opt;
  opt.t0 = 0.5;
  auto tr = simulate(first, a, 1.5, 0.5, 0.01, opt);
  EXPECT_DOUBLE_EQ(tr.times.front(), 0.5);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
  // Same step sequence, so the composition matches to round-off.
  EXPECT_LT(diff_norm(tr.states.back(), whole), 1e-12);
}

TEST(Simulate, NonFiniteCoefficientFailsWithStepIndex) {
  CoefficientField bad{k1D,
                       [](double t) {
                         return std::vector<double>(64, t > 0.025 ? std::numeric_limits<double>::quiet_NaN() : 0.1);
                       },
                       ClassA1{1.0, 1.0}, "bad", true};
  try {
    simulate(unit_mode(k1D, 1), bad, 1.5, 0.1, 0.01);
    FAIL() << "expected IntegrationFailure";
  } catch (const IntegrationFailure& e) {
    EXPECT_EQ(e.step(), 2u);  // the step from t=0.02 evaluates a at 0.03
  }
}

TEST(Simulate, ObservationAndTrapezoid) {
  const auto E = build_set(k1D, PeriodicSlab{1.0, 2 * kPi});
  SimulateOptions opt;
  opt.observe = &E;
  auto tr = simulate(unit_mode(k1D, 1), zero_coefficient(k1D), 2.0, 1.0, 1e-3, opt);
  for (const auto& d : tr.diagnostics) EXPECT_NEAR(d.l2_on_E, d.l2, 1e-12);
  // int_0^1 e^{-2t} dt
  EXPECT_NEAR(observed_energy(tr, 1.0), (1 - std::exp(-2.0)) / 2, 1e-6);
  EXPECT_NEAR(trapezoid({0, 1, 3}, {1, 1, 3}), 1 + 4, 1e-15);
}

TEST(EnergyCertificate, ZeroCoefficientWithoutSlack) {
  CounterRng rng(6, 0);
  auto tr = simulate(random_analytic(k1D, 0.2, rng), zero_coefficient(k1D), 1.5, 1.0, 0.01);
  const auto rep = energy_certificate(tr, zero_coefficient(k1D), 0.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.worst_ratio, 1.0);
  EXPECT_EQ(rep.growth_rate, 0.0);
}

TEST(EnergyCertificate, ConstantCoefficientExactGrowth) {
  const double c = 0.4;
  const auto a = constant_coefficient(k1D, c);
  auto tr = simulate(unit_mode(k1D, 0), a, 2.0, 1.0, 0.01);
  const auto rep = energy_certificate(tr, a, 1e-8);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.worst_ratio, 1.0, 1e-6);  // ETD2 error only
  EXPECT_DOUBLE_EQ(rep.growth_rate, c);
}

TEST(EnergyCertificate, CosineEnsemble) {
  const auto a = cosine_coefficient(k1D, 1.0, 1);
  EnsembleSpec ens;
  ens.count = 20;
  for (int m = 0; m < ens.count; ++m) {
    auto tr = simulate(ens.member(k1D, m), a, 1.5, 1.0, 1e-3);
    EXPECT_TRUE(energy_certificate(tr, a, 1e-6).pass) << "member " << m;
  }
}

TEST(EnergyCertificate, DetectsViolation) {
  Trajectory tr;
  tr.times = {0.0, 1.0};
  tr.diagnostics = {{0.0, 1.0}, {1.0, 2.0}};
  const auto rep = energy_certificate(tr, constant_coefficient(k1D, 0.1), 1e-6);
  EXPECT_FALSE(rep.pass);
  EXPECT_NEAR(rep.worst_ratio, 4.0 * std::exp(-0.2), 1e-12);
}
