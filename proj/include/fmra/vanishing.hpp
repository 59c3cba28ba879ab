#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fmra/estimator.hpp"
#include "fmra/grid.hpp"

namespace fmra {

// P_hat(w) = Re Psi_hat(w,w) and its central-difference derivative.
struct PowerSpectrumEstimate {
  FreqGrid grid;
  std::vector<double> values;
  std::vector<double> derivative;

  static PowerSpectrumEstimate from(const PsiDiagonal& psi) {
    PowerSpectrumEstimate ps;
    ps.grid = psi.grid;
    ps.values = psi.psi_hat;
    Spectrum tmp(psi.grid);
    for (int k = 0; k < psi.grid.count; ++k) tmp.values[k] = Complex(ps.values[k], 0.0);
    const Spectrum d = central_difference(tmp);
    ps.derivative.resize(psi.grid.count);
    for (int k = 0; k < psi.grid.count; ++k) ps.derivative[k] = d.values[k].real();
    return ps;
  }
};

struct ZeroSet {
  std::vector<double> locations;  // ascending, in (0, band_limit]
  double window = 0.0;            // epsilon
  double threshold = 0.0;         // absolute threshold actually applied
  double band_limit = 0.0;        // h^-1
};

// Zeros of P' with linear crossings, retained where P_hat is below the
// relative threshold; near-duplicates within 2*epsilon are merged keeping
// the candidate with the smaller P_hat.
inline ZeroSet detect_zeros(const PowerSpectrumEstimate& ps, double threshold_rel,
                            double epsilon, double band_limit) {
  const double dw = ps.grid.spacing;
  if (band_limit > ps.grid.max_freq + 1e-12)
    throw std::invalid_argument("detect_zeros: band limit exceeds the frequency grid");
  if (threshold_rel <= 0.0 || threshold_rel >= 1.0)
    throw std::invalid_argument("detect_zeros: threshold_rel must be in (0,1)");
  if (epsilon < 2.0 * dw - 1e-12)
    throw std::invalid_argument("detect_zeros: epsilon must cover at least 2 grid spacings");

  const int k0 = ps.grid.zero_index();
  double pmax = 0.0;
  for (int k = k0; k < ps.grid.count && ps.grid.point(k) <= band_limit + 1e-12; ++k)
    pmax = std::max(pmax, ps.values[k]);
  const double threshold = threshold_rel * pmax;

  struct Candidate { double xi; double p; };
  std::vector<Candidate> cands;
  for (int k = k0; k + 1 < ps.grid.count; ++k) {
    const double d0 = ps.derivative[k], d1 = ps.derivative[k + 1];
    if (d0 == 0.0 && ps.grid.point(k) == 0.0) continue;
    if ((d0 > 0.0 && d1 > 0.0) || (d0 < 0.0 && d1 < 0.0)) continue;
    if (d0 == d1) continue;
    const double frac = d0 / (d0 - d1);
    if (frac < 0.0 || frac >= 1.0) continue;
    const double xi = ps.grid.point(k) + frac * dw;
    if (xi <= 0.0 || xi > band_limit) continue;
    const double p = ps.values[k] + frac * (ps.values[k + 1] - ps.values[k]);
    if (p < threshold) cands.push_back({xi, p});
  }

  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.xi < b.xi; });
  std::vector<Candidate> merged;
  for (const auto& c : cands) {
    if (!merged.empty() && c.xi - merged.back().xi < 2.0 * epsilon) {
      if (c.p < merged.back().p) merged.back() = c;
    } else {
      merged.push_back(c);
    }
  }

  ZeroSet zs;
  zs.window = epsilon;
  zs.threshold = threshold;
  zs.band_limit = band_limit;
  for (const auto& c : merged) zs.locations.push_back(c.xi);
  return zs;
}

// Windowed Kotlarski integration with sign flips at the estimated zeros
// (d=1). Inside a window the magnitude is held at the left edge, with the
// sign flipping at the zero itself; outside [-band, band] the estimate is 0.
// The integrand is near-singular just inside a window, so cells straddling a
// window edge are integrated up to the edge with the edge value linearly
// extrapolated from the two nearest grid points on the retained side.
inline FourierEstimate windowed_kotlarski(const PsiDiagonal& psi, const ZeroSet& zeros,
                                          Complex c_hat) {
  if (psi.psi_tilde.empty())
    throw std::invalid_argument("windowed_kotlarski: psi_tilde not filled");
  for (double xi : zeros.locations) {
    if (xi + zeros.window > zeros.band_limit || xi - zeros.window < 0.0)
      throw std::invalid_argument(
          "windowed_kotlarski: exclusion window extends past the band limits");
  }
  const int m = psi.grid.count;
  const int k0 = psi.grid.zero_index();
  const double dw = psi.grid.spacing;
  const double w0 = psi.grid.point(0);

  std::vector<Complex> integrand(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    integrand[k] = psi.grad1[k] / psi.psi_tilde[k];
    if (!std::isfinite(integrand[k].real()) || !std::isfinite(integrand[k].imag()))
      throw std::runtime_error("windowed_kotlarski: non-finite integrand");
  }
  // integrand at a window edge, extrapolated from the retained side
  // (side = -1: from below, +1: from above)
  const auto edge_value = [&](double w, int side) {
    int k1 = (side < 0) ? static_cast<int>(std::floor((w - w0) / dw))
                        : static_cast<int>(std::ceil((w - w0) / dw));
    k1 = std::clamp(k1, 1, m - 2);
    const int k2 = k1 - side;  // second point further on the retained side
    const Complex slope = (integrand[k1] - integrand[k2]) / (psi.grid.point(k1) - psi.grid.point(k2));
    return integrand[k1] + slope * (w - psi.grid.point(k1));
  };

  FourierEstimate fe;
  fe.method = FourierEstimate::Method::Alg2;
  fe.zero_value = c_hat;
  fe.spectrum = Spectrum(psi.grid);
  auto& out = fe.spectrum.values;

  // held value (cumulative integral at the opening edge) per window
  std::vector<Complex> edge_integral(zeros.locations.size());
  std::size_t wi = 0;        // first window whose closing edge is ahead
  bool inside = false;       // currently inside window wi
  Complex acc{0.0, 0.0};

  out[k0] = c_hat;
  for (int k = k0 + 1; k < m; ++k) {
    const double a = psi.grid.point(k - 1), b = psi.grid.point(k);
    if (b > zeros.band_limit + 1e-12) break;  // values stay 0 past the band
    // walk the retained segments of [a, b], splitting at window edges
    double cur = a;
    Complex curval = integrand[k - 1];
    for (;;) {
      if (inside) {
        const double close = zeros.locations[wi] + zeros.window;
        if (close >= b) break;
        cur = close;
        curval = edge_value(close, +1);
        inside = false;
        ++wi;
      } else {
        const double open = (wi < zeros.locations.size())
                                ? zeros.locations[wi] - zeros.window
                                : std::numeric_limits<double>::infinity();
        if (open >= b) {
          // full-cell case uses dw exactly, matching kotlarski_integrate
          acc += ((cur == a) ? dw : (b - cur)) * 0.5 * (curval + integrand[k]);
          break;
        }
        if (open > cur) acc += (open - cur) * 0.5 * (curval + edge_value(open, -1));
        edge_integral[wi] = acc;
        inside = true;
      }
    }
    // count zeros at or below b for the sign, and locate a containing window
    int flips = 0;
    int holding = -1;
    for (std::size_t i = 0; i < zeros.locations.size(); ++i) {
      if (zeros.locations[i] <= b) ++flips;
      if (std::abs(b - zeros.locations[i]) < zeros.window) holding = static_cast<int>(i);
    }
    const double sign = (flips % 2 == 0) ? 1.0 : -1.0;
    out[k] = sign * c_hat * std::exp(holding >= 0 ? edge_integral[holding] : acc);
  }
  for (int k = 0; k < k0; ++k) {
    const int mirror = 2 * k0 - k;
    if (mirror < m) out[k] = std::conj(out[mirror]);
  }
  return fe;
}

}  // namespace fmra
