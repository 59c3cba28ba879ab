#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmra/estimator.hpp"
#include "fmra/fourier.hpp"
#include "fmra/grid.hpp"
#include "fmra/signals.hpp"

namespace fmra {

// Deconvolution kernels specified by their Fourier transform: K^ft(0)=1,
// even, supported on [-1,1]. "sinc" is the sharp rectangular cutoff.
struct KernelSpec {
  enum class Kind { Sinc, Poly, FlatTop };
  Kind kind = Kind::Sinc;
  double poly_order = 3.0;  // a in (1-w^2)^a
  double flat_c0 = 0.5;
  double flat_b = 1.0;

  static KernelSpec sinc() { return KernelSpec{Kind::Sinc, 0.0, 0.0, 0.0}; }
  static KernelSpec poly(double a) {
    if (a < 1.0) throw std::invalid_argument("KernelSpec: polynomial order must be >= 1");
    return KernelSpec{Kind::Poly, a, 0.0, 0.0};
  }
  static KernelSpec flat_top(double c0, double b) {
    if (c0 <= 0.0 || c0 >= 1.0 || b <= 0.0)
      throw std::invalid_argument("KernelSpec: flat-top needs c0 in (0,1) and b > 0");
    return KernelSpec{Kind::FlatTop, 0.0, c0, b};
  }
};

inline double kernel_ft_eval(const KernelSpec& spec, double w) {
  const double aw = std::abs(w);
  switch (spec.kind) {
    case KernelSpec::Kind::Sinc:
      return aw <= 1.0 ? 1.0 : 0.0;
    case KernelSpec::Kind::Poly: {
      if (spec.poly_order < 1.0)
        throw std::invalid_argument("kernel_ft_eval: polynomial order must be >= 1");
      if (aw > 1.0) return 0.0;
      return std::pow(1.0 - w * w, spec.poly_order);
    }
    case KernelSpec::Kind::FlatTop: {
      if (aw <= spec.flat_c0) return 1.0;
      if (aw >= 1.0) return 0.0;
      const double d0 = aw - spec.flat_c0;
      const double d1 = aw - 1.0;
      return std::exp(-spec.flat_b * std::exp(-spec.flat_b / (d0 * d0)) / (d1 * d1));
    }
  }
  return 0.0;
}

// Final deconvolution step: multiply by K^ft(h w), invert, keep the grid.
inline SampledField recover_signal(const FourierEstimate& fe, const KernelSpec& kernel,
                                   double h, const SpaceGrid& target) {
  if (h <= 0.0 || h >= 1.0)
    throw std::invalid_argument("recover_signal: bandwidth must be in (0,1)");
  if (1.0 / h > fe.spectrum.grid.max_freq)
    throw std::invalid_argument(
        "recover_signal: band 1/h = " + std::to_string(1.0 / h) +
        " exceeds the grid's maximum frequency " +
        std::to_string(fe.spectrum.grid.max_freq) + "; increase the padding factor");
  Spectrum windowed(fe.spectrum.grid);
  for (int k = 0; k < windowed.grid.count; ++k)
    windowed.values[k] =
        fe.spectrum.values[k] * kernel_ft_eval(kernel, h * windowed.grid.point(k));
  return inverse_cft(windowed, target);
}

// Relative l-infinity error on [-1,1]; the truth is l-infinity normalized so
// the denominator is 1.
inline double relative_sup_error(const SampledField& est, const SignalSpec& truth) {
  double err = 0.0;
  for (int j = 0; j < est.grid.count(); ++j) {
    const double t = est.grid.point(j);
    if (t < -1.0 || t > 1.0) continue;
    err = std::max(err, std::abs(est.values[j] - eval_signal(truth, t)));
  }
  return err;
}

struct RecoveryResult {
  SampledField estimate;
  double bandwidth = 0.0;
  std::optional<double> rel_sup_error;
};

// 17 log-spaced bandwidth candidates in [0.02, 0.2].
inline std::vector<double> default_bandwidth_candidates(double lo = 0.02,
                                                        double hi = 0.2,
                                                        int n = 17) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

// Oracle selection: evaluates every candidate against the known truth and
// returns the argmin; ties break toward larger h.
inline std::pair<double, RecoveryResult> oracle_bandwidth(
    const FourierEstimate& fe, const KernelSpec& kernel, const SignalSpec& truth,
    const std::vector<double>& candidates, const SpaceGrid& target) {
  if (candidates.empty())
    throw std::invalid_argument("oracle_bandwidth: empty candidate list");
  std::optional<RecoveryResult> best;
  for (double h : candidates) {
    SampledField est = recover_signal(fe, kernel, h, target);
    const double err = relative_sup_error(est, truth);
    if (!best || err < *best->rel_sup_error ||
        (err == *best->rel_sup_error && h > best->bandwidth)) {
      best = RecoveryResult{std::move(est), h, err};
    }
  }
  return {best->bandwidth, std::move(*best)};
}

}  // namespace fmra
