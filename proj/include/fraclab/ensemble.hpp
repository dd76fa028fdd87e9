#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "fraclab/norms.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// Make coefficients Hermitian-symmetric (c_{-m} = conj c_m) so the physical
/// field is real; self-conjugate modes keep their real part.
inline void make_real(SpectralField& f) {
  const auto& grid = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto m = grid.modes(i);
    const std::size_t j = f.index_of(-m[0], -m[1]);
    if (j == i)
      f[i] = f[i].real();
    else if (j > i)
      f[j] = std::conj(f[i]);
  }
}

inline void normalize(SpectralField& f) {
  const double n = l2_norm(f);
  if (n > 0.0) f *= 1.0 / n;
}

/// Real unit-norm field with Gaussian coefficients on |m_axis| <= max_mode.
inline SpectralField random_band_limited(const GridSpec& grid, int max_mode,
                                         CounterRng& rng) {
  SpectralField f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto m = grid.modes(i);
    if (std::abs(m[0]) > max_mode || std::abs(m[1]) > max_mode) continue;
    f[i] = Complex(rng.normal(), rng.normal());
  }
  make_real(f);
  normalize(f);
  return f;
}

/// Real unit-norm field with coefficients exp(-rho |k|) times Gaussians.
inline SpectralField random_analytic(const GridSpec& grid, double rho,
                                     CounterRng& rng) {
  SpectralField f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double damp = std::exp(-rho * grid.wavenumber(i));
    f[i] = damp * Complex(rng.normal(), rng.normal());
  }
  make_real(f);
  normalize(f);
  return f;
}

/// Ensemble of initial data: even members are band-limited, odd members
/// analytic with decay rate `analytic_rho`.  Member i draws from stream i.
struct EnsembleSpec {
  int count = 20;
  std::uint64_t seed = 1;
  int band_limit = 8;
  double analytic_rho = 0.3;

  SpectralField member(const GridSpec& grid, int i) const {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    return i % 2 == 0 ? random_band_limited(grid, band_limit, rng)
                      : random_analytic(grid, analytic_rho, rng);
  }
};

/// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
/// Callers write results into per-index slots, so output order is fixed.
template <class Body>
void parallel_for(int n, Body&& body) {
  const int workers = std::max(
      1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fraclab
