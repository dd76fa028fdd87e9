#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "fraclab/ensemble.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

namespace testing_util {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline std::vector<std::complex<double>> random_samples(const fraclab::GridSpec& g,
                                                        std::uint64_t seed) {
  fraclab::CounterRng rng(seed, 0);
  std::vector<std::complex<double>> x(g.size());
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  return x;
}

inline double max_abs_diff(const std::vector<std::complex<double>>& a,
                           const std::vector<std::complex<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<std::complex<double>>& a) {
  double m = 0.0;
  for (auto v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testing_util
