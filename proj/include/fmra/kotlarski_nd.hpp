#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fmra/deconvolution.hpp"
#include "fmra/grid.hpp"

namespace fmra {

// Joint characteristic function contract in dimension d: psi(w1, w2) with an
// optional first-argument gradient. When the gradient contract is absent it
// is supplied by central differences with a relative step.
struct CFEvaluator {
  int dimension = 1;
  std::function<Complex(const std::vector<double>&, const std::vector<double>&)> eval;
  std::function<std::vector<Complex>(const std::vector<double>&,
                                     const std::vector<double>&)>
      grad1;  // may be empty

  std::vector<Complex> gradient1(const std::vector<double>& w1,
                                 const std::vector<double>& w2) const {
    if (grad1) return grad1(w1, w2);
    double norm = 0.0;
    for (double x : w1) norm += x * x;
    for (double x : w2) norm += x * x;
    const double step = 1e-4 * (1.0 + std::sqrt(norm));
    std::vector<Complex> g(dimension);
    std::vector<double> wp = w1, wm = w1;
    for (int i = 0; i < dimension; ++i) {
      wp[i] = w1[i] + step;
      wm[i] = w1[i] - step;
      g[i] = (eval(wp, w2) - eval(wm, w2)) / (2.0 * step);
      wp[i] = w1[i];
      wm[i] = w1[i];
    }
    return g;
  }
};

struct PairedSampleBatch {
  std::vector<std::vector<double>> z1;  // N x d
  std::vector<std::vector<double>> z2;  // N x d
  std::uint64_t seed = 0;
};

// Empirical joint CF: psi_hat(w1,w2) = N^-1 sum exp(i w1.Z1 + i w2.Z2), with
// the exact analytic gradient of the sample mean.
inline CFEvaluator empirical_joint_cf(const PairedSampleBatch& batch) {
  if (batch.z1.empty() || batch.z1.size() != batch.z2.size())
    throw std::invalid_argument("empirical_joint_cf: need matching nonempty samples");
  const int d = static_cast<int>(batch.z1.front().size());
  for (const auto& row : batch.z1)
    if (static_cast<int>(row.size()) != d)
      throw std::invalid_argument("empirical_joint_cf: ragged sample matrix");

  // shared_ptr copies keep the evaluator cheap to pass around
  auto z1 = std::make_shared<std::vector<std::vector<double>>>(batch.z1);
  auto z2 = std::make_shared<std::vector<std::vector<double>>>(batch.z2);
  CFEvaluator cf;
  cf.dimension = d;
  cf.eval = [z1, z2, d](const std::vector<double>& w1, const std::vector<double>& w2) {
    Complex acc{0.0, 0.0};
    const std::size_t n = z1->size();
    for (std::size_t i = 0; i < n; ++i) {
      double phase = 0.0;
      for (int k = 0; k < d; ++k)
        phase += w1[k] * (*z1)[i][k] + w2[k] * (*z2)[i][k];
      acc += std::polar(1.0, phase);
    }
    return acc / static_cast<double>(n);
  };
  cf.grad1 = [z1, z2, d](const std::vector<double>& w1, const std::vector<double>& w2) {
    std::vector<Complex> acc(d, Complex{0.0, 0.0});
    const std::size_t n = z1->size();
    for (std::size_t i = 0; i < n; ++i) {
      double phase = 0.0;
      for (int k = 0; k < d; ++k)
        phase += w1[k] * (*z1)[i][k] + w2[k] * (*z2)[i][k];
      const Complex e = std::polar(1.0, phase);
      for (int k = 0; k < d; ++k) acc[k] += Complex(0.0, (*z1)[i][k]) * e;
    }
    for (auto& g : acc) g /= static_cast<double>(n);
    return acc;
  };
  return cf;
}

enum class RayMode {
  Phi0,  // CF of the shared component: arguments (0, alpha w)
  Phi1   // CF of the first noise component: arguments (alpha w, -alpha w)
};

// Ray-integral exponential representation: a branch-free evaluation of the
// Kotlarski identities via the log-derivative integral along alpha in [0,1].
// The mean_vector is the caller-known E[X1] (Phi0) or E[X0] (Phi1).
inline Complex ray_exp_integral(const CFEvaluator& cf, RayMode mode,
                                const std::vector<double>& omega,
                                const std::vector<double>& mean_vector, int nodes) {
  if (nodes < 16) throw std::invalid_argument("ray_exp_integral: need at least 16 nodes");
  const int d = cf.dimension;
  if (static_cast<int>(omega.size()) != d || static_cast<int>(mean_vector.size()) != d)
    throw std::invalid_argument("ray_exp_integral: dimension mismatch");

  std::vector<Complex> values(nodes);
  std::vector<double> w1(d), w2(d);
  for (int j = 0; j < nodes; ++j) {
    const double alpha = static_cast<double>(j) / (nodes - 1);
    for (int k = 0; k < d; ++k) {
      if (mode == RayMode::Phi0) {
        w1[k] = 0.0;
        w2[k] = alpha * omega[k];
      } else {
        w1[k] = alpha * omega[k];
        w2[k] = -alpha * omega[k];
      }
    }
    const Complex psi = cf.eval(w1, w2);
    if (std::abs(psi) < 1e-8)
      throw std::runtime_error("ray_exp_integral: vanishing joint CF on the ray");
    const std::vector<Complex> g = cf.gradient1(w1, w2);
    Complex dot{0.0, 0.0};
    for (int k = 0; k < d; ++k) dot += g[k] * omega[k];
    values[j] = dot / psi;
  }
  Complex integral{0.0, 0.0};
  const double dalpha = 1.0 / (nodes - 1);
  for (int j = 0; j + 1 < nodes; ++j)
    integral += dalpha * 0.5 * (values[j] + values[j + 1]);
  double wm = 0.0;
  for (int k = 0; k < d; ++k) wm += omega[k] * mean_vector[k];
  return std::exp(Complex(0.0, -wm) + integral);
}

// Deconvolution of a characteristic-function estimate on a 1-d grid into a
// density estimate. The input follows the CF sign convention E[exp(i w X)],
// so the array is reversed to the transform convention before inversion.
inline SampledField deconvolve_phi(const std::vector<Complex>& phi_values,
                                   const SpaceGrid& target, const KernelSpec& kernel,
                                   double h) {
  const FreqGrid fg(target);
  if (static_cast<int>(phi_values.size()) != fg.count)
    throw std::invalid_argument("deconvolve_phi: value count does not match the grid");
  FourierEstimate fe;
  fe.spectrum = Spectrum(fg);
  for (int k = 0; k < fg.count; ++k) {
    const int mirror = 2 * fg.zero_index() - k;
    fe.spectrum.values[k] =
        (mirror >= 0 && mirror < fg.count) ? phi_values[mirror] : Complex{0.0, 0.0};
  }
  fe.zero_value = fe.spectrum.values[fg.zero_index()];
  return recover_signal(fe, kernel, h, target);
}

}  // namespace fmra
