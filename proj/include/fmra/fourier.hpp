#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "fmra/grid.hpp"

namespace fmra {

namespace detail {

// FFTW planning is not thread-safe; execution with explicit arrays is.
// Plans are created unaligned so they can run on any buffer.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> tmp(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(tmp.data()),
        reinterpret_cast<fftw_complex*>(tmp.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void fft_inplace(std::vector<Complex>& data, int sign) {
  fftw_plan p = FftPlanCache::instance().get(static_cast<int>(data.size()), sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()),
                   reinterpret_cast<fftw_complex*>(data.data()));
}

inline void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": non-finite input value");
}

// Core quadrature transform: out(w_k) = delta * sum_j in_j * exp(-i w_k t_j),
// evaluated for all k via an FFT with phase corrections for the grid offsets.
inline std::vector<Complex> quadrature_dft(const SpaceGrid& g,
                                           const std::vector<Complex>& in) {
  const int m = g.count();
  const FreqGrid fg(g);
  const double t0 = g.point(0);
  std::vector<Complex> buf(static_cast<std::size_t>(m));
  // exp(-i w_0 j delta) = (-1)^j exactly, since w_0 = -(M/2) * 2pi/(M delta)
  for (int j = 0; j < m; ++j) buf[j] = (j % 2 == 0) ? in[j] : -in[j];
  fft_inplace(buf, FFTW_FORWARD);
  for (int k = 0; k < m; ++k) {
    const double wk = fg.point(k);
    buf[k] *= g.spacing * std::polar(1.0, -wk * t0);
  }
  return buf;
}

}  // namespace detail

// Quadrature approximation of the continuous Fourier transform
// f^ft(w) = int f(t) exp(-i t w) dt on the derived frequency grid.
inline Spectrum forward_cft(const SampledField& field) {
  detail::check_finite(field.values, "forward_cft");
  const int m = field.grid.count();
  std::vector<Complex> in(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) in[j] = field.values[j];
  return Spectrum(FreqGrid(field.grid), detail::quadrature_dft(field.grid, in));
}

// Transform of (-i t) * field(t): the exact frequency derivative of
// forward_cft, free of finite-difference error.
inline Spectrum moment_weighted_cft(const SampledField& field) {
  detail::check_finite(field.values, "moment_weighted_cft");
  const int m = field.grid.count();
  std::vector<Complex> in(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    in[j] = Complex(0.0, -field.grid.point(j)) * field.values[j];
  return Spectrum(FreqGrid(field.grid), detail::quadrature_dft(field.grid, in));
}

// Inverse quadrature transform restricted to the target grid. The spectrum
// must be conjugate-symmetric within tolerance; the residual imaginary part
// is checked and then discarded.
inline SampledField inverse_cft(const Spectrum& spec, const SpaceGrid& target) {
  const FreqGrid& fg = spec.grid;
  const int m = fg.count;
  if (!(FreqGrid(target) == fg))
    throw std::invalid_argument("inverse_cft: target grid incompatible with spectrum");

  const double t0 = target.point(0);
  std::vector<Complex> buf(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k)
    buf[k] = spec.values[k] * std::polar(1.0, fg.point(k) * t0);
  detail::fft_inplace(buf, FFTW_BACKWARD);
  const double scale = fg.spacing / (2.0 * std::numbers::pi);
  double max_abs = 0.0, max_imag = 0.0;
  for (int j = 0; j < m; ++j) {
    buf[j] *= (j % 2 == 0) ? scale : -scale;
    max_abs = std::max(max_abs, std::abs(buf[j]));
    max_imag = std::max(max_imag, std::abs(buf[j].imag()));
  }
  if (max_abs > 0.0 && max_imag > 1e-8 * max_abs)
    throw std::invalid_argument(
        "inverse_cft: spectrum is not conjugate-symmetric (imaginary residual above tolerance)");

  SampledField out(target);
  for (int j = 0; j < m; ++j) out.values[j] = buf[j].real();
  return out;
}

// Second-order finite differences in frequency; one-sided second-order
// stencils at the two endpoints so accuracy is uniform over the grid.
inline Spectrum central_difference(const Spectrum& spec) {
  const int m = spec.grid.count;
  if (m < 3) throw std::invalid_argument("central_difference: need at least 3 points");
  const double h = spec.grid.spacing;
  Spectrum out(spec.grid);
  out.values[0] =
      (-3.0 * spec.values[0] + 4.0 * spec.values[1] - spec.values[2]) / (2.0 * h);
  for (int k = 1; k + 1 < m; ++k)
    out.values[k] = (spec.values[k + 1] - spec.values[k - 1]) / (2.0 * h);
  out.values[m - 1] =
      (3.0 * spec.values[m - 1] - 4.0 * spec.values[m - 2] + spec.values[m - 3]) /
      (2.0 * h);
  return out;
}

}  // namespace fmra
