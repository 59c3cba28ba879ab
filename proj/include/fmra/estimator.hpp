#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "fmra/fourier.hpp"
#include "fmra/grid.hpp"
#include "fmra/observation.hpp"

namespace fmra {

enum class GradientMode {
  CentralDifference,  // differentiate each y^ft on the padded frequency grid
  MomentWeighted      // exact derivative via the (-i t)-weighted transform
};

// Diagonal second-moment estimate Psi(w,w), its magnitude-floor
// regularization, and the first-argument gradient on the diagonal.
struct PsiDiagonal {
  FreqGrid grid;
  std::vector<double> psi_hat;
  std::vector<Complex> psi_tilde;  // empty until regularize_psi
  std::vector<Complex> grad1;
  double reg_constant = 1.0;
  std::size_t sample_size = 0;
};

struct FourierEstimate {
  enum class Method { Alg1, Alg2 };
  Spectrum spectrum;
  Complex zero_value;
  Method method = Method::Alg1;
};

// Streaming accumulator over observation chunks; consuming one full batch or
// many chunks with the same seeds yields identical sums.
class PsiAccumulator {
 public:
  PsiAccumulator(const FreqGrid& grid, GradientMode mode)
      : grid_(grid),
        mode_(mode),
        sum_abs2_(static_cast<std::size_t>(grid.count), 0.0),
        sum_grad_(static_cast<std::size_t>(grid.count), Complex{0.0, 0.0}) {}

  void add(const ObservationBatch& batch) {
    if (!(FreqGrid(batch.grid) == grid_))
      throw std::invalid_argument("PsiAccumulator: batch grid mismatch");
    for (const auto& field : batch.fields) {
      const Spectrum yft = forward_cft(field);
      const Spectrum dyft = (mode_ == GradientMode::CentralDifference)
                                ? central_difference(yft)
                                : moment_weighted_cft(field);
      for (int k = 0; k < grid_.count; ++k) {
        sum_abs2_[k] += std::norm(yft.values[k]);
        sum_grad_[k] += dyft.values[k] * std::conj(yft.values[k]);
      }
      sum_zero_ += yft.values[grid_.zero_index()];
      ++count_;
    }
  }

  std::size_t count() const { return count_; }
  GradientMode mode() const { return mode_; }

  // Psi_hat(w) = N^-1 sum |y^ft(w)|^2 - k_eta^ft(w,w), and likewise for the
  // gradient; noise_diag must come from the same grid and quadrature.
  PsiDiagonal finalize(const std::vector<double>& noise_diag,
                       const std::vector<Complex>& noise_grad_diag,
                       double reg_constant) const {
    if (count_ == 0) throw std::invalid_argument("PsiAccumulator: no observations");
    if (static_cast<int>(noise_diag.size()) != grid_.count ||
        static_cast<int>(noise_grad_diag.size()) != grid_.count)
      throw std::invalid_argument("PsiAccumulator: noise diagonal grid mismatch");
    PsiDiagonal psi;
    psi.grid = grid_;
    psi.reg_constant = reg_constant;
    psi.sample_size = count_;
    psi.psi_hat.resize(grid_.count);
    psi.grad1.resize(grid_.count);
    const double inv_n = 1.0 / static_cast<double>(count_);
    for (int k = 0; k < grid_.count; ++k) {
      psi.psi_hat[k] = sum_abs2_[k] * inv_n - noise_diag[k];
      psi.grad1[k] = sum_grad_[k] * inv_n - noise_grad_diag[k];
    }
    return psi;
  }

  // c_hat = N^-1 sum y^ft_n(0), the zero-frequency mass used for rescaling.
  Complex zero_mean() const {
    if (count_ == 0) throw std::invalid_argument("PsiAccumulator: no observations");
    return sum_zero_ / static_cast<double>(count_);
  }

 private:
  FreqGrid grid_;
  GradientMode mode_;
  std::vector<double> sum_abs2_;
  std::vector<Complex> sum_grad_;
  Complex sum_zero_{0.0, 0.0};
  std::size_t count_ = 0;
};

inline PsiDiagonal estimate_psi_diag(
    const ObservationBatch& batch, const std::vector<double>& noise_diag,
    const std::vector<Complex>& noise_grad_diag, double reg_constant = 1.0,
    GradientMode mode = GradientMode::CentralDifference) {
  PsiAccumulator acc(FreqGrid(batch.grid), mode);
  acc.add(batch);
  return acc.finalize(noise_diag, noise_grad_diag, reg_constant);
}

// Pointwise magnitude floor: Psi_tilde = Psi_hat / (1 ^ r sqrt(N) |Psi_hat|).
// Exact zeros take the floor value 1/(r sqrt(N)) with sign +1.
inline PsiDiagonal regularize_psi(PsiDiagonal psi) {
  if (psi.reg_constant <= 0.0)
    throw std::invalid_argument("regularize_psi: regularization constant must be positive");
  if (psi.sample_size < 1)
    throw std::invalid_argument("regularize_psi: empty sample");
  const double rs = psi.reg_constant * std::sqrt(static_cast<double>(psi.sample_size));
  psi.psi_tilde.resize(psi.psi_hat.size());
  for (std::size_t k = 0; k < psi.psi_hat.size(); ++k) {
    const double v = psi.psi_hat[k];
    const double mag = std::abs(v);
    if (mag == 0.0) {
      psi.psi_tilde[k] = Complex(1.0 / rs, 0.0);
    } else {
      psi.psi_tilde[k] = Complex(v / std::min(1.0, rs * mag), 0.0);
    }
  }
  return psi;
}

inline Complex rescale_at_zero(const ObservationBatch& batch) {
  PsiAccumulator acc(FreqGrid(batch.grid), GradientMode::CentralDifference);
  acc.add(batch);
  const Complex c = acc.zero_mean();
  if (std::abs(c) < 1e-6)
    throw std::runtime_error(
        "rescale_at_zero: zero-frequency mass too small; the estimator is inapplicable");
  return c;
}

// Kotlarski cumulative integration on the diagonal: for w >= 0,
// f^ft(w) = c_hat * exp(T(w)) with T the cumulative trapezoid of
// grad1/psi_tilde from 0; negative frequencies by conjugate symmetry.
inline FourierEstimate kotlarski_integrate(const PsiDiagonal& psi, Complex c_hat) {
  if (psi.psi_tilde.empty())
    throw std::invalid_argument("kotlarski_integrate: psi_tilde not filled");
  const int m = psi.grid.count;
  const int k0 = psi.grid.zero_index();
  std::vector<Complex> integrand(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    integrand[k] = psi.grad1[k] / psi.psi_tilde[k];
    if (!std::isfinite(integrand[k].real()) || !std::isfinite(integrand[k].imag()))
      throw std::runtime_error("kotlarski_integrate: non-finite integrand");
  }
  FourierEstimate fe;
  fe.method = FourierEstimate::Method::Alg1;
  fe.zero_value = c_hat;
  fe.spectrum = Spectrum(psi.grid);
  auto& out = fe.spectrum.values;

  const double dw = psi.grid.spacing;
  Complex t_sum{0.0, 0.0};
  out[k0] = c_hat;
  for (int k = k0 + 1; k < m; ++k) {
    t_sum += dw * 0.5 * (integrand[k - 1] + integrand[k]);
    out[k] = c_hat * std::exp(t_sum);
  }
  for (int k = 0; k < k0; ++k) {
    const int mirror = 2 * k0 - k;
    if (mirror < m) {
      out[k] = std::conj(out[mirror]);
    } else {
      // unmatched -Nyquist point: extend the cumulative sum by one cell
      const Complex t_edge = t_sum + dw * integrand[m - 1];
      out[k] = std::conj(c_hat * std::exp(t_edge));
    }
  }
  return fe;
}

}  // namespace fmra
