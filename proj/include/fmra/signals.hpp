#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fmra/grid.hpp"

namespace fmra {

enum class SignalKind { F1, F2, F3, F4 };

inline const char* signal_name(SignalKind k) {
  switch (k) {
    case SignalKind::F1: return "f1";
    case SignalKind::F2: return "f2";
    case SignalKind::F3: return "f3";
    case SignalKind::F4: return "f4";
  }
  return "?";
}

inline SignalKind signal_from_name(const std::string& s) {
  if (s == "f1") return SignalKind::F1;
  if (s == "f2") return SignalKind::F2;
  if (s == "f3") return SignalKind::F3;
  if (s == "f4") return SignalKind::F4;
  throw std::invalid_argument("unknown signal: " + s);
}

namespace detail {

// Irwin-Hall density of order n (sum of n standard uniforms), on [0, n].
inline double irwin_hall(int n, double x) {
  if (x <= 0.0 || x >= n) return 0.0;
  double fact = 1.0;
  for (int i = 2; i < n; ++i) fact *= i;
  double sum = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= static_cast<int>(x); ++k) {
    sum += ((k % 2 == 0) ? 1.0 : -1.0) * binom * std::pow(x - k, n - 1);
    binom *= static_cast<double>(n - k) / (k + 1);
  }
  return sum / fact;
}

// n-fold convolution of the indicator of [-w, w], via the Irwin-Hall density:
// g(x) = (2w)^(n-1) * ih_n((x + n*w) / (2w)).
inline double indicator_convolution(int n, double w, double x) {
  return std::pow(2.0 * w, n - 1) * irwin_hall(n, (x + n * w) / (2.0 * w));
}

inline double sinc(double u) {
  if (std::abs(u) < 1e-8) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

inline double g1(double x) { return indicator_convolution(2, 0.5, x); }
inline double g2(double x) { return indicator_convolution(4, 0.25, x); }
inline double g3(double x) { return std::exp(-20.0 * x * x) * std::cos(8.0 * x); }

inline double g1_ft(double w) {
  const double s = sinc(w / 2.0);
  return s * s;
}
inline double g2_ft(double w) {
  const double s = 0.5 * sinc(w / 4.0);
  return s * s * s * s;
}

inline double raw_eval(SignalKind kind, double t) {
  const double pi = std::numbers::pi;
  switch (kind) {
    case SignalKind::F1: return g1(t) + g1(pi * t);
    case SignalKind::F2: return g2(t) + g2(pi * t);
    case SignalKind::F3: return g3(t - 0.3);
    case SignalKind::F4: {
      const double var = 0.02;  // N(mu, .02) read as variance
      const double c = 1.0 / std::sqrt(2.0 * pi * var);
      const double a = t + 0.3, b = t - 0.5;
      return 0.5 * c * (std::exp(-a * a / (2.0 * var)) + std::exp(-b * b / (2.0 * var)));
    }
  }
  return 0.0;
}

inline Complex raw_eval_ft(SignalKind kind, double w) {
  const double pi = std::numbers::pi;
  switch (kind) {
    case SignalKind::F1:
      // dilation: g(pi x) transforms to (1/pi) g^ft(w/pi)
      return Complex(g1_ft(w) + g1_ft(w / pi) / pi, 0.0);
    case SignalKind::F2:
      return Complex(g2_ft(w) + g2_ft(w / pi) / pi, 0.0);
    case SignalKind::F3: {
      const double c = 0.5 * std::sqrt(pi / 20.0);
      const double lobes = std::exp(-(w - 8.0) * (w - 8.0) / 80.0) +
                           std::exp(-(w + 8.0) * (w + 8.0) / 80.0);
      return c * lobes * std::polar(1.0, -0.3 * w);
    }
    case SignalKind::F4: {
      const Complex phases =
          0.5 * (std::polar(1.0, 0.3 * w) + std::polar(1.0, -0.5 * w));
      return phases * std::exp(-0.01 * w * w);
    }
  }
  return Complex{};
}

inline double linf_normalizer(SignalKind kind) {
  // sup over [-1,1] of |raw signal|; dense scan plus local ternary refinement
  double best = 0.0, best_x = 0.0;
  const int n = 40000;
  for (int i = 0; i <= n; ++i) {
    const double x = -1.0 + 2.0 * i / n;
    const double v = std::abs(raw_eval(kind, x));
    if (v > best) { best = v; best_x = x; }
  }
  double lo = best_x - 2.0 / n, hi = best_x + 2.0 / n;
  for (int it = 0; it < 80; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (std::abs(raw_eval(kind, m1)) < std::abs(raw_eval(kind, m2))) lo = m1;
    else hi = m2;
  }
  return std::max(best, std::abs(raw_eval(kind, 0.5 * (lo + hi))));
}

}  // namespace detail

struct SignalSpec {
  SignalKind kind;
  double normalization;     // the l-infinity normalizer of the raw signal
  double smoothness_beta;   // 2, 4, or +inf for the supersmooth signals

  static SignalSpec make(SignalKind k) {
    double beta;
    switch (k) {
      case SignalKind::F1: beta = 2.0; break;
      case SignalKind::F2: beta = 4.0; break;
      default: beta = std::numeric_limits<double>::infinity(); break;
    }
    return SignalSpec{k, detail::linf_normalizer(k), beta};
  }
};

inline double eval_signal(const SignalSpec& spec, double t) {
  return detail::raw_eval(spec.kind, t) / spec.normalization;
}

inline Complex eval_signal_ft(const SignalSpec& spec, double w) {
  return detail::raw_eval_ft(spec.kind, w) / spec.normalization;
}

inline SampledField sample_signal(const SignalSpec& spec, const SpaceGrid& grid,
                                  double shift = 0.0) {
  SampledField out(grid);
  for (int j = grid.physical_begin(); j < grid.physical_end(); ++j)
    out.values[j] = eval_signal(spec, grid.point(j) - shift);
  return out;
}

}  // namespace fmra
