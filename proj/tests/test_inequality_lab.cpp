#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fraclab/analytic_bounds.hpp"
#include "fraclab/coefficients.hpp"
#include "fraclab/ensemble.hpp"
#include "fraclab/error.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/observability.hpp"
#include "fraclab/radius.hpp"
#include "fraclab/spectral_inequality.hpp"
#include "fraclab/telescope.hpp"
#include "oracles.hpp"

using namespace fraclab;

namespace {

constexpr double kPi = std::numbers::pi;

ThickSet half_torus(int points, double period) {
  return build_set(GridSpec{1, points, period}, PeriodicSlab{0.5, period});
}

}  // namespace

// ---------------------------------------------------------------- LS constant

TEST(LsConstant, FullTorusIsOne) {
  for (int dim : {1, 2}) {
    GridSpec g{dim, dim == 1 ? 128 : 32, 2 * kPi};
    auto E = build_set(g, PeriodicSlab{1.0, 2 * kPi});
    for (double N : {0.0, 3.0, 10.0}) {
      const auto c = ls_constant(E, N);
      EXPECT_NEAR(c.constant, 1.0, 1e-10);
      EXPECT_EQ(c.status, LSConstant::Status::ok);
    }
    const auto G = concentration_gram(E, 4.0);
    EXPECT_LT((G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).norm(), 1e-13);
  }
}

TEST(LsConstant, DcOnlyIsInverseVolumeFraction) {
  GridSpec g{2, 32, 2 * kPi};
  auto E = build_set(g, RandomPerCell{0.3, kPi / 2, 5});
  const auto c = ls_constant(E, 0.0);
  EXPECT_EQ(c.dimension, 1u);
  EXPECT_NEAR(c.constant, 1.0 / E.volume_fraction(), 1e-12);
}

TEST(LsConstant, MatchesHighPrecisionOracle) {
  auto E = half_torus(256, 2 * kPi);
  for (int M : {1, 3, 5}) {
    const double lam = oracle::gram_lambda_min_1d(E.indicator(), M);
    const auto c = ls_constant(E, M);
    EXPECT_EQ(c.dimension, std::size_t(2 * M + 1));
    EXPECT_NEAR(c.constant, 1.0 / lam, 1e-8 / lam) << "M=" << M;
    // The dense Hermitian route agrees while lambda_min stays well above round-off.
    const auto d = ls_constant(E, M, GramSolver::dense_hermitian);
    EXPECT_NEAR(d.lambda_min, lam, 1e-13);
  }
}

TEST(LsConstant, SolversAgree) {
  GridSpec g{2, 16, 2 * kPi};
  auto E = build_set(g, RandomPerCell{0.5, kPi, 2});
  for (double N : {1.0, 2.0, 3.0}) {
    const auto a = ls_constant(E, N, GramSolver::sampled_svd);
    const auto b = ls_constant(E, N, GramSolver::dense_hermitian);
    const auto c = ls_constant(E, N, GramSolver::inverse_iteration);
    EXPECT_NEAR(a.lambda_min, b.lambda_min, 1e-12);
    EXPECT_NEAR(a.lambda_min, c.lambda_min, 1e-10 * a.lambda_min + 1e-14);
  }
}

TEST(LsConstant, MonotoneInBandAndSet) {
  const GridSpec g{1, 256, 1.0};
  auto small = build_set(g, PeriodicSlab{0.25, 0.5});
  auto big = build_set(g, PeriodicSlab{0.5, 0.5});
  double prev_small = 0.0, prev_big = 0.0;
  for (int N = 0; N <= 64; N += 4) {
    const auto cs = ls_constant(small, N);
    const auto cb = ls_constant(big, N);
    ASSERT_EQ(cb.status, LSConstant::Status::ok) << "N=" << N;
    EXPECT_GE(cb.constant, 1.0);
    EXPECT_GE(cb.constant, prev_big * (1 - 1e-9));
    prev_big = cb.constant;
    if (cs.status == LSConstant::Status::ok) {
      EXPECT_GE(cs.constant, prev_small * (1 - 1e-9));
      EXPECT_GE(cs.constant, cb.constant * (1 - 1e-9));  // subset has the larger constant
      prev_small = cs.constant;
    }
  }
}

TEST(LsConstant, EmptySetAndRangeChecks) {
  GridSpec g{1, 32, 2 * kPi};
  ThickSet empty(g, std::vector<std::uint8_t>(32, 0), 2 * kPi);
  const auto c = ls_constant(empty, 2.0);
  EXPECT_EQ(c.status, LSConstant::Status::too_thin);
  EXPECT_TRUE(std::isinf(c.constant));
  auto E = half_torus(32, 2 * kPi);
  EXPECT_THROW(ls_constant(E, 17.0), InvalidArgument);
  EXPECT_THROW(ls_constant(E, -1.0), InvalidArgument);
}

TEST(LsGrowthFit, FullTorusAndThinnerSets) {
  const GridSpec g{1, 256, 1.0};
  std::vector<double> Ns;
  for (int N = 8; N <= 40; N += 8) Ns.push_back(N);
  auto full = ls_growth_fit(build_set(g, PeriodicSlab{1.0, 0.5}), Ns);
  EXPECT_NEAR(full.fit.slope, 0.0, 1e-12);
  for (const auto& c : full.constants) EXPECT_NEAR(c.constant, 1.0, 1e-10);

  auto half = ls_growth_fit(build_set(g, PeriodicSlab{0.5, 0.5}), Ns);
  auto quarter = ls_growth_fit(build_set(g, PeriodicSlab{0.25, 0.5}), Ns);
  EXPECT_GT(half.fit.slope, 0.0);
  EXPECT_TRUE(std::isfinite(half.fit.slope));
  EXPECT_GE(half.fit.residual, 0.0);
  EXPECT_GE(quarter.fit.slope, half.fit.slope);
  EXPECT_THROW(ls_growth_fit(build_set(g, PeriodicSlab{0.5, 0.5}), {4.0, 2.0}), InvalidArgument);
}

TEST(LineFit, ExactLine) {
  const auto f = least_squares_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-15);
  EXPECT_NEAR(f.intercept, 1.0, 1e-15);
  EXPECT_NEAR(f.residual, 0.0, 1e-15);
}

// ---------------------------------------------------------------- radius

TEST(RadiusEstimate, SyntheticExponential) {
  for (int dim : {1, 2}) {
    GridSpec g{dim, 64, 2 * kPi};
    auto f = apply_radial_multiplier(SpectralField(g), [](double) { return 0.0; });
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-0.7 * g.wavenumber(i));
    const auto r = radius_estimate(f);
    EXPECT_NEAR(r.sigma, 0.7, 1e-6);
    EXPECT_EQ(r.status, RadiusEstimate::Status::fitted);
    // Scalar invariance.
    auto h = f;
    h *= Complex(-3e4, 2.0);
    EXPECT_NEAR(radius_estimate(h).sigma, r.sigma, 1e-10);
  }
}

TEST(RadiusEstimate, BandLimitedIsCapped) {
  const GridSpec g{1, 64, 2 * kPi};
  CounterRng rng(1, 0);
  const auto f = random_band_limited(g, 8, rng);
  const auto r = radius_estimate(f);
  EXPECT_EQ(r.status, RadiusEstimate::Status::band_limited);
  EXPECT_TRUE(std::isfinite(r.sigma));
  EXPECT_GT(r.sigma, 10.0);
  EXPECT_THROW(radius_estimate(SpectralField(g)), NumericalError);
  // Only two shells in a window without any drop: not enough data.
  EXPECT_THROW(radius_estimate(f, -1.0, FitWindow{2.0, 3.0}), NumericalError);
}

TEST(RadiusEstimate, GrowsUnderGaussianSmoothing) {
  const GridSpec g{1, 128, 2 * kPi};
  CounterRng rng(2, 0);
  auto noise = random_analytic(g, 0.0, rng);
  double prev = 0.0;
  for (double t : {0.02, 0.04, 0.08}) {
    const double sigma = radius_estimate(semigroup_apply(noise, 2.0, t)).sigma;
    EXPECT_GT(sigma, prev) << "t=" << t;
    prev = sigma;
  }
}

// ---------------------------------------------------------------- interpolation ratio

TEST(InterpRatio, Examples) {
  const GridSpec g{1, 64, 2 * kPi};
  auto full = build_set(g, PeriodicSlab{1.0, 2 * kPi});
  auto half = half_torus(64, 2 * kPi);
  CounterRng rng(3, 0);
  auto u0 = random_band_limited(g, 8, rng);
  for (double t : {0.1, 0.5}) {
    auto ut = semigroup_apply(u0, 1.5, t);
    EXPECT_LE(interp_ratio(ut, l2_norm(u0), half, 0.0), 1.0);
    EXPECT_NEAR(interp_ratio(ut, l2_norm(u0), full, 1.0), 1.0, 1e-12);
  }
  EXPECT_EQ(interp_ratio(1.0, 0.0, 1.0, 0.5), kInfinity);
  EXPECT_EQ(interp_ratio(0.0, 0.0, 1.0, 0.5), 0.0);
  EXPECT_THROW(interp_ratio(1.0, 1.0, 1.0, 1.5), InvalidArgument);
}

TEST(InterpScan, EnsembleMaximaFinite) {
  const GridSpec g{1, 64, 2 * kPi};
  auto E = half_torus(64, 2 * kPi);
  ObservabilitySettings cfg;
  cfg.dt = 1e-2;
  cfg.ensemble.count = 6;
  const auto a = cosine_coefficient(g, 0.5, 1);
  const auto rows = interp_scan(a, E, {0.1, 0.5}, {0.25, 0.5}, cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.max_ratio));
    EXPECT_GT(r.max_ratio, 0.0);
  }
}

// ---------------------------------------------------------------- high-low split

TEST(HighLow, MatchesHighPrecisionBisection) {
  using oracle::Real50;
  auto F = [](const Real50& N) {
    return (1 + exp(N)) * exp(-N * log(boost::math::constants::e<Real50>() + N)) - Real50("1e-3");
  };
  // Last sign change on a coarse scan brackets the tail root.
  Real50 lo = 0;
  for (int i = 0; i <= 400; ++i)
    if (F(Real50(i) / 10) >= 0) lo = Real50(i) / 10;
  const Real50 root = oracle::bisect(F, lo, lo + Real50("0.1"));
  const auto got = highlow_threshold(1.0, 0.0, 1.0, 1e-3);
  EXPECT_FALSE(got.at_origin);
  EXPECT_NEAR(got.N0, static_cast<double>(root), 1e-10);
  EXPECT_GE(got.residual_low, 0.0);
  EXPECT_LE(got.residual_high, 0.0);
}

TEST(HighLow, EndpointAndMonotonicity) {
  EXPECT_DOUBLE_EQ(highlow_balance(0.0, 1.0, 0.0, 1.0), 2.0);
  double prev = 0.0;
  for (double eps : {0.5, 1e-1, 1e-2, 1e-4, 1e-8}) {
    const auto r = highlow_threshold(1.5, 0.3, 1.0, eps);
    EXPECT_GT(r.N0, prev);
    prev = r.N0;
  }
  // F(0) = 1 + C_ls; with C_ls = 1e-9 and epsilon = 1 - 1e-9 the root sits
  // at N0 ~ 2e-9 / c.
  const auto near = highlow_threshold(1.0, 0.0, 1e-9, 1.0 - 1e-9);
  EXPECT_FALSE(near.at_origin);
  EXPECT_LT(near.N0, 1e-8);
  EXPECT_THROW(highlow_threshold(1.0, 0.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(highlow_threshold(1.0, 0.0, 1.0, 0.0), InvalidArgument);
}

// ---------------------------------------------------------------- telescoping

TEST(Telescope, PublishedArithmetic) {
  const auto tc = telescope_constant({1.0, 0.5, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(tc.lambda, 0.75);
  EXPECT_NEAR(tc.closed_form, std::exp(4.0), 1e-12 * std::exp(4.0));
  const auto near1 = telescope_constant({1.0, 0.999, 1.0, 1.0});
  EXPECT_NEAR(near1.closed_form, std::exp(2.0), 0.01 * std::exp(2.0));
  EXPECT_LT(near1.terms, 200);
  EXPECT_TRUE(std::isfinite(near1.series_value));
}

TEST(Telescope, RejectsInvalidInput) {
  EXPECT_THROW(telescope_constant({0.5, 0.5, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(telescope_constant({1.0, 1.0, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(telescope_constant({1.0, 0.5, 0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(telescope_constant({1.0, 0.5, 1.0, 1.5}), InvalidArgument);
}

TEST(Telescope, SeriesMatchesDirectChain) {
  // Independent evaluation of the chain sum in long double.
  const double C = 2.0, th = 0.6, d = 0.5, T = 0.8;
  const auto tc = telescope_constant({C, th, d, T});
  const long double lam = std::pow((C + 1 - th) / (C + 1), 1 / d);
  long double sum = 0;
  auto w = [&](int m) {
    const long double gap = T * std::pow(lam, m - 1) * (1 - lam);
    return std::exp(-(C + 1 - th) / (th * std::pow(gap, (long double)d)));
  };
  for (int m = 1; m < 5000; ++m) sum += w(m) - w(m + 1);
  const long double want = std::pow((long double)C, 1 / (long double)th) / sum;
  EXPECT_NEAR(tc.series_value, (double)want, 1e-9 * (double)want);
  EXPECT_DOUBLE_EQ(tc.lambda, (double)lam);
}

TEST(SpacetimeLift, PlugInAndMonotone) {
  const auto b = spacetime_lift(1.0, 1.0, 1.0);
  EXPECT_NEAR(b(2.0), std::exp(1.0), 1e-14);
  for (double C : {0.5, 1.0, 3.0})
    for (double d : {0.5, 1.0})
      for (double th : {0.3, 0.7}) {
        const auto B = spacetime_lift(C, d, th);
        double prev = INFINITY;
        for (int i = 1; i <= 1000; ++i) {
          const double gap = i / 1000.0;
          const double v = B.log_bound(gap);
          EXPECT_LT(v, prev);
          prev = v;
        }
      }
}

TEST(SpacetimeLift, AbsorbedConstantDominates) {
  for (double C : {0.5, 1.0, 4.0})
    for (double d : {0.5, 1.0, 2.0}) {
      const auto B = spacetime_lift(C, d, 0.5);
      const double C0 = B.absorbed_constant();
      for (int i = 1; i <= 1000; ++i) {
        const double gap = i / 1000.0;
        EXPECT_GE(std::log(C0) + C0 / std::pow(gap, d), B.log_bound(gap)) << gap;
      }
      // Minimality: a slightly smaller constant fails somewhere on (0, 1].
      const double c = C0 * (1 - 1e-6);
      bool fails = false;
      for (int i = 0; i <= 20000 && !fails; ++i) {
        const double gap = std::pow(10.0, -10.0 + 10.0 * i / 20000);
        fails = std::log(c) + c / std::pow(gap, d) < B.log_bound(gap);
      }
      EXPECT_TRUE(fails);
    }
}

// ---------------------------------------------------------------- observability

TEST(Observability, FullTorusZeroCoefficientBelowInverseT) {
  const GridSpec g{1, 64, 2 * kPi};
  auto E = build_set(g, PeriodicSlab{1.0, 2 * kPi});
  ObservabilitySettings cfg;
  cfg.dt = 1e-2;
  cfg.ensemble.count = 8;
  const auto scan = observability_scan(zero_coefficient(g), E, {0.5, 1.0}, cfg);
  ASSERT_EQ(scan.rows.size(), 2u);
  for (const auto& r : scan.rows) {
    EXPECT_LE(r.empirical_ratio, 1.0 / r.T * (1 + 1e-9));
    EXPECT_TRUE(r.pass);
  }
  EXPECT_LE(scan.rows[1].empirical_ratio, scan.rows[0].empirical_ratio);
}

TEST(Observability, EmptySetReportsInfinity) {
  const GridSpec g{1, 32, 2 * kPi};
  ThickSet E(g, std::vector<std::uint8_t>(32, 0), 2 * kPi);
  ObservabilitySettings cfg;
  cfg.dt = 1e-2;
  cfg.ensemble.count = 3;
  cfg.ensemble.seed = 77;
  const auto row = observability_experiment(cosine_coefficient(g, 0.5, 1), E, 0.5, cfg);
  EXPECT_TRUE(row.infinite);
  EXPECT_FALSE(row.pass);
  EXPECT_EQ(row.offending_member, 0);
  EXPECT_EQ(row.offending_seed, 77u);
  EXPECT_TRUE(std::isinf(row.empirical_ratio));
}

TEST(Observability, RejectsMisalignedHorizon) {
  const GridSpec g{1, 32, 2 * kPi};
  auto E = half_torus(32, 2 * kPi);
  ObservabilitySettings cfg;
  cfg.dt = 0.3;
  cfg.ensemble.count = 2;
  EXPECT_THROW(observability_experiment(zero_coefficient(g), E, 0.5, cfg), InvalidArgument);
}

// ---------------------------------------------------------------- analytic bounds

TEST(CellDerivativeSum, ConstantFieldCountsCells) {
  const GridSpec g{2, 16, 4.0};
  std::vector<double> ones(g.size(), 1.0);
  auto f = transform(g, std::span<const double>(ones));
  EXPECT_NEAR(cell_derivative_sum(f, 0.3, 1.0, 6), 16.0, 1e-12);
  EXPECT_THROW(cell_derivative_sum(f, 0.3, 1.5, 6), InvalidArgument);
}

// Regression constant for sum_j M_j^2 <= K ||f||_{G^{4 sigma}}^2, measured on
// the fixed ensembles below (1D max 2.694, 2D max 4.064) and frozen.
TEST(CellDerivativeSum, FrozenStripBound) {
  struct Case {
    int dim, points, count;
    double K;
  };
  for (const auto& cs : {Case{1, 64, 40, 2.70}, Case{2, 32, 6, 4.07}}) {
    const GridSpec g{cs.dim, cs.points, 2 * kPi};
    double worst = 0.0;
    for (int i = 0; i < cs.count; ++i) {
      CounterRng r(1234, i);
      auto f = random_band_limited(g, 6, r);
      for (double sigma : {0.05, 0.1, 0.2}) {
        const double lhs = cell_derivative_sum(f, sigma, g.period / 8, 40);
        const double rhs = std::pow(strip_sup_norm(f, 4 * sigma, 41), 2);
        worst = std::max(worst, lhs / rhs);
      }
    }
    EXPECT_LE(worst, cs.K) << "dim " << cs.dim;
    EXPECT_GT(worst, 0.9 * cs.K) << "dim " << cs.dim;  // regression drift check
  }
}

TEST(EnvelopeFit, RecoversExactShape) {
  std::vector<double> t, v;
  const double s = 1.5;
  for (double x = 0.1; x <= 5.0; x += 0.1) {
    t.push_back(x);
    v.push_back(2.0 * std::exp(2.0 * (std::pow(x, -1 / (s - 1)) + x)));
  }
  const auto fit = envelope_fit(t, v, s);
  EXPECT_NEAR(fit.K, 2.0, 1e-10);
  EXPECT_GE(fit.min_residual, 0.0);
  EXPECT_THROW(envelope_fit({0.0}, {1.0}, s), InvalidArgument);
  EXPECT_THROW(envelope_fit({1.0}, {INFINITY}, s), InvalidArgument);
}
