#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fraclab/error.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab {

/// Lattice modes with |k| <= N as flat indices, in storage order.
inline std::vector<std::size_t> band_modes(const GridSpec& grid, double N) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.wavenumber(i) <= N * (1.0 + 1e-14) + 1e-14) out.push_back(i);
  return out;
}

/// Gram matrix G_ab = |torus|^{-1} int_E exp(i (k_a - k_b).x) dx of the band
/// |k| <= N, with the integral taken by grid quadrature.
inline Eigen::MatrixXcd concentration_gram(const ThickSet& E, double N) {
  const auto& grid = E.grid();
  std::vector<Complex> ind(grid.size());
  for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = E.contains(i) ? 1.0 : 0.0;
  // I(d) = n^-dim sum_{x in E} exp(+2 pi i d.j / n): an unscaled inverse DFT.
  detail::dft_inplace(grid, ind, false);
  const double scale = 1.0 / static_cast<double>(grid.size());
  const auto modes = band_modes(grid, N);
  Eigen::MatrixXcd G(modes.size(), modes.size());
  SpectralField lookup(grid);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const auto ma = grid.modes(modes[a]);
    for (std::size_t b = 0; b < modes.size(); ++b) {
      const auto mb = grid.modes(modes[b]);
      G(a, b) = ind[lookup.index_of(ma[0] - mb[0], ma[1] - mb[1])] * scale;
    }
  }
  return G;
}

/// Columns are the band-limited unit modes sampled on E, scaled so that
/// A^* A equals the concentration Gram matrix.
inline Eigen::MatrixXcd sampled_band_matrix(const ThickSet& E, double N) {
  const auto& grid = E.grid();
  const auto modes = band_modes(grid, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  Eigen::MatrixXcd A(E.cell_count(), modes.size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!E.contains(i)) continue;
    const double x0 = grid.coordinate(i, 0);
    const double x1 = grid.dim == 2 ? grid.coordinate(i, 1) : 0.0;
    for (std::size_t b = 0; b < modes.size(); ++b) {
      const auto k = grid.wavevector(modes[b]);
      A(row, static_cast<Eigen::Index>(b)) = std::polar(scale, k[0] * x0 + k[1] * x1);
    }
    ++row;
  }
  return A;
}

enum class GramSolver { automatic, sampled_svd, dense_hermitian, inverse_iteration };

struct LSConstant {
  enum class Status { ok, too_thin };

  double constant = 1.0;  ///< 1 / lambda_min, the sharp discrete constant
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  std::size_t dimension = 0;
  Status status = Status::ok;
  GramSolver solver = GramSolver::automatic;
};

namespace detail {

// Smallest eigenvalue of a Hermitian positive semidefinite matrix by inverse
// iteration on an LDLT factorization, refined with Rayleigh quotients.
inline double smallest_eigenvalue_inverse_iteration(const Eigen::MatrixXcd& G,
                                                    double tol = 1e-14) {
  const Eigen::Index n = G.rows();
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(G);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Gram factorization failed");
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = std::polar(1.0, 0.7 * static_cast<double>(i) + 0.3);  // generic start
  v.normalize();
  double lambda = std::real(v.dot(G * v));
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXcd w = ldlt.solve(v);
    const double nw = w.norm();
    if (!std::isfinite(nw) || nw == 0.0) break;
    v = w / nw;
    const double next = std::real(v.dot(G * v));
    const bool done = std::abs(next - lambda) <= tol * std::max(std::abs(next), 1e-300);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace detail

/// Sharp discrete Logvinenko-Sereda constant of E at radius N:
/// sup over f with spectrum in |k| <= N of ||f||^2 / ||f||_E^2 = 1/lambda_min(G).
///
/// The automatic solver takes singular values of the sampled band matrix
/// (lambda = sigma^2, which resolves eigenvalues far below machine epsilon)
/// when that is affordable, a dense Hermitian eigensolve of G up to dimension
/// 4096, and inverse iteration above.  Eigenvalues below the solver's
/// resolution (sigma_min < 1e-12 sigma_max for the SVD, lambda_min < 1e-12
/// lambda_max otherwise) are flagged as too thin.
inline LSConstant ls_constant(const ThickSet& E, double N,
                              GramSolver solver = GramSolver::automatic) {
  const auto& grid = E.grid();
  detail::require(N >= 0.0, "band radius must be nonnegative");
  detail::require(N <= grid.max_wavenumber() * (1.0 + 1e-12),
                  "band radius exceeds the grid's Nyquist radius");
  LSConstant out;
  const auto dim = band_modes(grid, N).size();
  out.dimension = dim;
  if (solver == GramSolver::automatic) {
    const double work = static_cast<double>(E.cell_count()) * dim * dim;
    if (work <= 2e9)
      solver = GramSolver::sampled_svd;
    else if (dim <= 4096)
      solver = GramSolver::dense_hermitian;
    else
      solver = GramSolver::inverse_iteration;
  }
  out.solver = solver;
  if (E.cell_count() == 0) {
    out.lambda_min = 0.0;
    out.lambda_max = 0.0;
    out.constant = std::numeric_limits<double>::infinity();
    out.status = LSConstant::Status::too_thin;
    return out;
  }
  double resolution;
  switch (solver) {
    case GramSolver::sampled_svd: {
      const auto A = sampled_band_matrix(E, N);
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
      const auto& sv = svd.singularValues();
      const double smax = sv(0);
      const double smin = A.rows() >= A.cols() ? sv(sv.size() - 1) : 0.0;
      out.lambda_max = smax * smax;
      out.lambda_min = smin * smin;
      resolution = 1e-24 * out.lambda_max;
      break;
    }
    case GramSolver::dense_hermitian: {
      const auto G = concentration_gram(E, N);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(G, Eigen::EigenvaluesOnly);
      if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigensolve failed");
      out.lambda_min = eig.eigenvalues()(0);
      out.lambda_max = eig.eigenvalues()(eig.eigenvalues().size() - 1);
      resolution = 1e-12 * out.lambda_max;
      break;
    }
    default: {
      const auto G = concentration_gram(E, N);
      out.lambda_min = detail::smallest_eigenvalue_inverse_iteration(G);
      out.lambda_max = G.diagonal().real().maxCoeff();  // lower bound is enough here
      resolution = 1e-12 * out.lambda_max;
      break;
    }
  }
  out.constant = out.lambda_min > 0.0 ? 1.0 / out.lambda_min
                                      : std::numeric_limits<double>::infinity();
  if (out.lambda_min <= resolution) out.status = LSConstant::Status::too_thin;
  return out;
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;  ///< RMS residual
  std::size_t points = 0;
};

inline LineFit least_squares_line(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  LineFit fit;
  fit.points = x.size();
  if (x.empty()) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

struct LSReport {
  std::vector<double> N_list;
  std::vector<LSConstant> constants;
  LineFit fit;  ///< log C(N) against N over the resolved entries
};

inline LSReport ls_growth_fit(const ThickSet& E, const std::vector<double>& N_list) {
  for (std::size_t i = 1; i < N_list.size(); ++i)
    detail::require(N_list[i] > N_list[i - 1], "N_list must be increasing");
  LSReport rep;
  rep.N_list = N_list;
  std::vector<double> xs, ys;
  for (double N : N_list) {
    rep.constants.push_back(ls_constant(E, N));
    const auto& c = rep.constants.back();
    if (c.status == LSConstant::Status::ok && std::isfinite(c.constant)) {
      xs.push_back(N);
      ys.push_back(std::log(c.constant));
    }
  }
  rep.fit = least_squares_line(xs, ys);
  return rep;
}

struct HighLowThreshold {
  double N0 = 0.0;
  double residual_low = 0.0;   ///< F(lower bracket) - epsilon (>= 0)
  double residual_high = 0.0;  ///< F(upper bracket) - epsilon (<= 0)
  bool at_origin = false;      ///< epsilon >= F(0): N0 = 0 returned
};

/// Balancing function (1 + C e^{C N}) exp(-c N log(e+N)^{1-kappa}) of the
/// high/low frequency split.
inline double highlow_balance(double N, double c, double kappa, double C_ls) {
  const double logf = std::log1p(C_ls * std::exp(C_ls * N)) -
                      c * N * std::pow(std::log(std::numbers::e + N), 1.0 - kappa);
  return std::exp(logf);
}

/// Largest N0 with balance(N0) = epsilon (the root on the decreasing tail).
inline HighLowThreshold highlow_threshold(double c, double kappa, double C_ls,
                                          double epsilon) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  detail::require(c > 0.0 && C_ls > 0.0, "rates must be positive");
  detail::require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0, 1]");
  auto F = [&](double N) { return highlow_balance(N, c, kappa, C_ls); };
  HighLowThreshold out;
  if (epsilon >= F(0.0)) {
    out.at_origin = true;
    out.residual_low = F(0.0) - epsilon;
    out.residual_high = out.residual_low;
    return out;
  }
  double hi = 1.0;
  while (F(hi) >= epsilon) {
    hi *= 2.0;
    if (hi > 1e12)
      throw NumericalError("balancing function does not decay below epsilon");
  }
  // Last grid point where F >= epsilon starts the bracket on the tail.
  const int scan = 4096;
  double lo = 0.0;
  for (int i = scan; i >= 0; --i) {
    const double N = hi * i / scan;
    if (F(N) >= epsilon) {
      lo = N;
      hi = std::min(hi, hi * (i + 1) / scan);
      break;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) >= epsilon ? lo : hi) = mid;
  }
  out.N0 = 0.5 * (lo + hi);
  out.residual_low = F(lo) - epsilon;
  out.residual_high = F(hi) - epsilon;
  return out;
}

}  // namespace fraclab
