#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fraclab/ensemble.hpp"
#include "fraclab/error.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/spectral.hpp"
#include "test_helpers.hpp"

using namespace fraclab;
using testing_util::max_abs;
using testing_util::max_abs_diff;
using testing_util::random_samples;

namespace {

constexpr double kPi = std::numbers::pi;

// Direct O(n^2) unitary DFT, written from the series definition.
std::vector<Complex> direct_coefficients(const GridSpec& g, const std::vector<Complex>& x) {
  std::vector<Complex> c(g.size());
  const double w = std::pow(std::sqrt(g.period) / g.points, g.dim);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto k = g.wavevector(i);
    Complex acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double phase = k[0] * g.coordinate(j, 0) + (g.dim == 2 ? k[1] * g.coordinate(j, 1) : 0.0);
      acc += x[j] * std::polar(1.0, -phase);
    }
    c[i] = acc * w;
  }
  return c;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW((GridSpec{3, 16, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{1, 15, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{1, 6, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{1, 16, 0.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((GridSpec{2, 8, 3.0}.validate()));
}

TEST(Grid, FrequencyLayout) {
  GridSpec g{1, 8, 2.0};
  EXPECT_EQ(g.mode_of_index(0), 0);
  EXPECT_EQ(g.mode_of_index(3), 3);
  EXPECT_EQ(g.mode_of_index(4), -4);
  EXPECT_EQ(g.mode_of_index(7), -1);
  for (int m = -4; m < 4; ++m) EXPECT_EQ(g.mode_of_index(g.index_of_mode(m)), m);
  EXPECT_DOUBLE_EQ(g.wavevector(1)[0], kPi);
  EXPECT_DOUBLE_EQ(g.nyquist(), 4 * kPi);
}

TEST(Transform, RejectsShapeMismatch) {
  GridSpec g{1, 16, 1.0};
  std::vector<double> x(15, 0.0);
  EXPECT_THROW(transform(g, std::span<const double>(x)), InvalidArgument);
}

TEST(Transform, ConstantGoesToDcOnly) {
  for (int dim : {1, 2}) {
    GridSpec g{dim, 16, 3.0};
    std::vector<double> x(g.size(), 3.0);
    auto f = transform(g, std::span<const double>(x));
    // u = P^{-d/2} c_0  =>  c_0 = 3 P^{d/2}
    EXPECT_NEAR(f[0].real(), 3.0 * std::pow(3.0, dim / 2.0), 1e-12);
    for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LT(std::abs(f[i]), 1e-12);
  }
}

TEST(Transform, CosineGivesTwoEqualModes) {
  GridSpec g{1, 32, 5.0};
  std::vector<double> x(g.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::cos(2 * kPi * g.coordinate(j, 0) / g.period);
  auto f = transform(g, std::span<const double>(x));
  const double want = 0.5 * std::sqrt(g.period);
  EXPECT_NEAR(std::abs(f[f.index_of(1)]), want, 1e-12);
  EXPECT_NEAR(std::abs(f[f.index_of(-1)]), want, 1e-12);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (i != f.index_of(1) && i != f.index_of(-1)) EXPECT_LT(std::abs(f[i]), 1e-12);
}

TEST(Transform, MatchesDirectSum) {
  for (int dim : {1, 2}) {
    GridSpec g{dim, dim == 1 ? 24 : 10, 1.7};
    auto x = random_samples(g, 11 + dim);
    auto f = transform(g, std::span<const Complex>(x));
    auto want = direct_coefficients(g, x);
    std::vector<Complex> got(f.coeffs().begin(), f.coeffs().end());
    EXPECT_LT(max_abs_diff(got, want), 1e-12 * max_abs(want));
  }
}

TEST(Transform, RoundTripAndPlancherel) {
  for (int dim : {1, 2}) {
    for (int n : {8, 64, 256}) {
      GridSpec g{dim, n, 2.5};
      auto x = random_samples(g, 100 + n + dim);
      auto f = transform(g, std::span<const Complex>(x));
      auto back = inverse(f);
      EXPECT_LT(max_abs_diff(back, x), 1e-12 * max_abs(x));
      const double phys = physical_l2(g, x);
      EXPECT_NEAR(l2_norm(f), phys, 1e-12 * phys);
    }
  }
}

TEST(FractionalApply, UnitModeAndConstant) {
  GridSpec g{1, 32, 2 * kPi};
  auto f = fractional_apply(unit_mode(g, 2), 2.0);
  EXPECT_NEAR(std::abs(f[f.index_of(2)] - Complex(4.0)), 0.0, 1e-14);
  auto dc = fractional_apply(unit_mode(g, 0), 0.7);
  EXPECT_EQ(l2_norm(dc), 0.0);
  EXPECT_THROW(fractional_apply(unit_mode(g, 1), 0.0), InvalidArgument);
  EXPECT_THROW(fractional_apply(unit_mode(g, 1), -1.0), InvalidArgument);
}

// s = 2 against the second-order finite-difference Laplacian.  For a mode
// e^{ikx} the centered difference gives (2 - 2cos(kh))/h^2 = k^2 (1 - (kh)^2/12 + ...),
// so the error is bounded by k_max^4 h^2 / 12 per unit coefficient.
TEST(FractionalApply, MatchesFiniteDifferenceLaplacian) {
  std::vector<double> errors;
  for (int n : {128, 256}) {
    GridSpec g{1, n, 2 * kPi};
    CounterRng rng(7, 0);
    auto f = random_band_limited(g, 8, rng);
    auto u = inverse_real(f);
    const double h = g.spacing();
    std::vector<double> fd(n);
    for (int j = 0; j < n; ++j)
      fd[j] = -(u[(j + 1) % n] - 2 * u[j] + u[(j + n - 1) % n]) / (h * h);
    auto lap = inverse_real(fractional_apply(f, 2.0));
    double err = 0.0, scale = 0.0;
    for (int j = 0; j < n; ++j) {
      err = std::max(err, std::abs(lap[j] - fd[j]));
      scale = std::max(scale, std::abs(lap[j]));
    }
    // Coefficients are unit-norm; |u_xx - fd| <= sum |c_m| k^4 h^2 / 12 / sqrt(P).
    double bound = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      bound += std::abs(f[i]) * std::pow(g.wavenumber(i), 4) * h * h / 12.0;
    bound /= std::sqrt(g.period);
    EXPECT_LE(err, bound * 1.0001) << "n=" << n;
    errors.push_back(err / scale);
  }
  // O(h^2): halving h cuts the error by ~4.
  EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.1);
}

TEST(Semigroup, DirectFormulaAndIdentity) {
  GridSpec g{1, 32, 2 * kPi};
  auto f = semigroup_apply(unit_mode(g, 2), 1.5, 0.5);
  EXPECT_NEAR(f[f.index_of(2)].real(), std::exp(-0.5 * std::pow(2.0, 1.5)), 1e-15);
  CounterRng rng(3, 0);
  auto r = random_analytic(g, 0.2, rng);
  auto same = semigroup_apply(r, 1.5, 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(same[i], r[i]);
  EXPECT_THROW(semigroup_apply(r, 1.5, -0.1), InvalidArgument);
  EXPECT_THROW(semigroup_apply(r, 1.0, 0.1), InvalidArgument);
}

TEST(Semigroup, NormNonincreasingAndSemigroupLaw) {
  GridSpec g{2, 32, 2 * kPi};
  CounterRng rng(5, 0);
  auto f = random_analytic(g, 0.1, rng);
  double prev = l2_norm(f);
  for (double t : {0.01, 0.05, 0.1, 0.5, 1.0}) {
    const double now = l2_norm(semigroup_apply(f, 1.7, t));
    EXPECT_LE(now, prev);
    prev = now;
  }
  auto ab = semigroup_apply(semigroup_apply(f, 1.7, 0.03), 1.7, 0.07);
  auto direct = semigroup_apply(f, 1.7, 0.1);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(std::abs(ab[i] - direct[i]), 0.0, 1e-14);
}

TEST(Semigroup, HighFrequencyDecayWithUnitConstant) {
  for (int dim : {1, 2}) {
    GridSpec g{dim, 64, 2 * kPi};
    for (int trial = 0; trial < 20; ++trial) {
      CounterRng rng(17, trial);
      auto f = random_analytic(g, 0.05, rng);
      for (double N : {0.0, 3.0, 10.5}) {
        auto high = project(f, N, Side::high);
        for (double t : {0.01, 0.2}) {
          const double out = l2_norm(semigroup_apply(high, 1.5, t));
          EXPECT_LE(out, std::exp(-t * std::pow(N, 1.5)) * l2_norm(high) * (1 + 1e-12));
        }
      }
    }
  }
}

TEST(Project, EdgeCasesAndOrthogonality) {
  GridSpec g{2, 16, 2 * kPi};
  CounterRng rng(9, 0);
  auto f = random_analytic(g, 0.0, rng);
  auto full = project(f, g.max_wavenumber(), Side::low);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(full[i], f[i]);
  auto dc = project(f, 0.0, Side::low);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_EQ(dc[i], Complex(0.0));
  EXPECT_EQ(dc[0], f[0]);
  EXPECT_THROW(project(f, -1.0, Side::low), InvalidArgument);

  for (int trial = 0; trial < 50; ++trial) {
    CounterRng r(21, trial);
    auto h = random_analytic(g, 0.1, r);
    const double N = 0.5 * trial * g.max_wavenumber() / 50.0;
    const double lo = l2_norm(project(h, N, Side::low));
    const double hi = l2_norm(project(h, N, Side::high));
    EXPECT_NEAR(lo * lo + hi * hi, 1.0, 1e-12);
    auto sum = project(h, N, Side::low) + project(h, N, Side::high);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(sum[i], h[i]);
  }
}

TEST(Project, NyquistBelongsToHighSide) {
  GridSpec g{1, 16, 2 * kPi};
  auto nyq = unit_mode(g, -8);
  EXPECT_EQ(l2_norm(project(nyq, 7.5, Side::low)), 0.0);
  EXPECT_EQ(l2_norm(project(nyq, 7.5, Side::high)), 1.0);
  EXPECT_EQ(l2_norm(project(nyq, 8.0, Side::low)), 1.0);
}

TEST(Multipliers, CommuteWithProjection) {
  GridSpec g{2, 32, 2 * kPi};
  CounterRng rng(4, 0);
  auto f = random_analytic(g, 0.1, rng);
  for (double N : {0.0, 2.0, 7.3, 30.0}) {
    auto a = project(fractional_apply(f, 1.3), N, Side::low);
    auto b = fractional_apply(project(f, N, Side::low), 1.3);
    auto c = project(semigroup_apply(f, 1.3, 0.2), N, Side::high);
    auto d = semigroup_apply(project(f, N, Side::high), 1.3, 0.2);
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_EQ(a[i], b[i]);
      EXPECT_EQ(c[i], d[i]);
    }
  }
}

TEST(Derivative, MatchesAnalyticDerivative) {
  GridSpec g{2, 32, 2 * kPi};
  std::vector<double> x(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    x[i] = std::sin(3 * g.coordinate(i, 0)) * std::cos(2 * g.coordinate(i, 1));
  auto f = transform(g, std::span<const double>(x));
  auto d = inverse_real(derivative(f, {1, 2}));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double want = -12.0 * std::cos(3 * g.coordinate(i, 0)) * std::cos(2 * g.coordinate(i, 1));
    EXPECT_NEAR(d[i], want, 1e-11);
  }
}

TEST(Dealias, ZeroesTopThird) {
  GridSpec g{1, 24, 2 * kPi};
  SpectralField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0;
  auto d = dealias(f);
  for (std::size_t i = 0; i < f.size(); ++i)
    EXPECT_EQ(std::abs(d[i]), std::abs(g.modes(i)[0]) <= 8 ? 1.0 : 0.0);
}
