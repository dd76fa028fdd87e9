#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fraclab/error.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

using Complex = std::complex<double>;

/// Fourier coefficients of a periodic field under the unitary convention
///
///   u(x) = period^{-dim/2} * sum_m c_m exp(i k_m . x),
///
/// so that the L2 norm of u over the torus equals the Euclidean norm of c.
class SpectralField {
 public:
  SpectralField() = default;

  explicit SpectralField(GridSpec grid)
      : grid_(grid), coeffs_((grid.validate(), grid.size())) {}

  SpectralField(GridSpec grid, std::vector<Complex> coeffs)
      : grid_(grid), coeffs_(std::move(coeffs)) {
    grid_.validate();
    detail::require(coeffs_.size() == grid_.size(),
                    "coefficient count does not match grid");
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }

  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }

  SpectralField& operator+=(const SpectralField& other) {
    check_same_grid(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& other) {
    check_same_grid(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other[i];
    return *this;
  }
  SpectralField& operator*=(Complex scale) {
    for (auto& c : coeffs_) c *= scale;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) {
    return a += b;
  }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) {
    return a -= b;
  }
  friend SpectralField operator*(Complex s, SpectralField a) { return a *= s; }

  /// Flat index of the integer frequency (m0, m1); m1 ignored in 1D.
  std::size_t index_of(int m0, int m1 = 0) const {
    const auto j0 = static_cast<std::size_t>(grid_.index_of_mode(m0));
    if (grid_.dim == 1) return j0;
    return j0 * grid_.points + static_cast<std::size_t>(grid_.index_of_mode(m1));
  }

 private:
  void check_same_grid(const SpectralField& other) const {
    detail::require(grid_ == other.grid_, "fields live on different grids");
  }

  GridSpec grid_;
  std::vector<Complex> coeffs_;
};

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

// Unscaled DFT along every axis; forward uses exp(-i...), inverse exp(+i...).
inline void dft_inplace(const GridSpec& grid, std::vector<Complex>& data,
                        bool forward) {
  auto& fft = fft_engine();
  const auto n = static_cast<std::size_t>(grid.points);
  std::vector<Complex> line(n), out(n);
  auto run = [&] {
    if (forward)
      fft.fwd(out, line);
    else
      fft.inv(out, line);
  };
  if (grid.dim == 1) {
    line.assign(data.begin(), data.end());
    run();
    data = out;
    return;
  }
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(data.begin() + r * n, n, line.begin());
    run();
    std::copy_n(out.begin(), n, data.begin() + r * n);
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) line[r] = data[r * n + c];
    run();
    for (std::size_t r = 0; r < n; ++r) data[r * n + c] = out[r];
  }
}

// Factor converting unscaled DFT output into unitary coefficients.
inline double unitary_scale(const GridSpec& grid) {
  return std::pow(std::sqrt(grid.period) / grid.points, grid.dim);
}

}  // namespace detail

/// Physical samples -> unitary Fourier coefficients.
inline SpectralField transform(const GridSpec& grid,
                               std::span<const Complex> samples) {
  grid.validate();
  detail::require(samples.size() == grid.size(),
                  "sample array shape does not match grid");
  std::vector<Complex> data(samples.begin(), samples.end());
  detail::dft_inplace(grid, data, true);
  const double scale = detail::unitary_scale(grid);
  for (auto& c : data) c *= scale;
  return SpectralField(grid, std::move(data));
}

inline SpectralField transform(const GridSpec& grid,
                               std::span<const double> samples) {
  std::vector<Complex> z(samples.begin(), samples.end());
  return transform(grid, std::span<const Complex>(z));
}

/// Unitary coefficients -> physical samples.
inline std::vector<Complex> inverse(const SpectralField& field) {
  std::vector<Complex> data(field.coeffs().begin(), field.coeffs().end());
  detail::dft_inplace(field.grid(), data, false);
  const double scale = 1.0 / detail::unitary_scale(field.grid()) /
                       static_cast<double>(field.grid().size());
  for (auto& v : data) v *= scale;
  return data;
}

inline std::vector<double> inverse_real(const SpectralField& field) {
  auto z = inverse(field);
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [](Complex v) { return v.real(); });
  return out;
}

/// Coefficient c_m = 1 at integer frequency (m0, m1), zero elsewhere.
inline SpectralField unit_mode(const GridSpec& grid, int m0, int m1 = 0) {
  SpectralField f(grid);
  f[f.index_of(m0, m1)] = 1.0;
  return f;
}

/// Multiply every coefficient by symbol(|k|).
template <class Symbol>
SpectralField apply_radial_multiplier(SpectralField field, Symbol&& symbol) {
  const auto& grid = field.grid();
  for (std::size_t i = 0; i < field.size(); ++i)
    field[i] *= symbol(grid.wavenumber(i));
  return field;
}

/// Fractional Laplacian: multiplier |k|^s, the DC mode maps to zero.
inline SpectralField fractional_apply(SpectralField field, double s) {
  detail::require(s > 0.0, "fractional order s must be positive");
  return apply_radial_multiplier(std::move(field), [s](double k) {
    return k == 0.0 ? 0.0 : std::pow(k, s);
  });
}

/// Fractional heat semigroup exp(-t |k|^s).
inline SpectralField semigroup_apply(SpectralField field, double s, double t) {
  detail::require(s > 1.0, "semigroup order s must exceed 1");
  detail::require(t >= 0.0, "semigroup time must be nonnegative");
  if (t == 0.0) return field;
  return apply_radial_multiplier(std::move(field), [s, t](double k) {
    return std::exp(-t * std::pow(k, s));
  });
}

enum class Side { low, high };

/// Frequency projection: low keeps |k| <= N, high keeps |k| > N.
inline SpectralField project(SpectralField field, double N, Side side) {
  detail::require(N >= 0.0, "projection radius must be nonnegative");
  return apply_radial_multiplier(std::move(field), [N, side](double k) {
    const bool low = k <= N;
    return (side == Side::low) == low ? 1.0 : 0.0;
  });
}

/// Two-thirds rule: zero every mode with |m_axis| > points/3 on some axis.
inline SpectralField dealias(SpectralField field) {
  const auto& grid = field.grid();
  const int cutoff = grid.points / 3;
  for (std::size_t i = 0; i < field.size(); ++i) {
    auto m = grid.modes(i);
    if (std::abs(m[0]) > cutoff || std::abs(m[1]) > cutoff) field[i] = 0.0;
  }
  return field;
}

/// Spectral partial derivative d^alpha; odd orders drop the Nyquist mode
/// of the differentiated axis so real fields stay real.
inline SpectralField derivative(SpectralField field, std::array<int, 2> alpha) {
  const auto& grid = field.grid();
  detail::require(alpha[0] >= 0 && alpha[1] >= 0, "negative derivative order");
  detail::require(grid.dim == 2 || alpha[1] == 0,
                  "second-axis derivative on a 1D grid");
  if (alpha[0] == 0 && alpha[1] == 0) return field;
  auto ipow = [](int p) {
    static constexpr Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[p % 4];
  };
  const Complex phase = ipow(alpha[0] + alpha[1]);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto m = grid.modes(i);
    const auto k = grid.wavevector(i);
    double mag = 1.0;
    for (int axis = 0; axis < grid.dim; ++axis) {
      if (alpha[axis] == 0) continue;
      if (alpha[axis] % 2 == 1 && grid.is_nyquist_axis(m[axis])) {
        mag = 0.0;
        break;
      }
      mag *= std::pow(k[axis], alpha[axis]);
    }
    field[i] *= phase * mag;
  }
  return field;
}

}  // namespace fraclab
