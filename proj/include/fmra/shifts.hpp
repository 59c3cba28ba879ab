#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmra/rng.hpp"
#include "fmra/signals.hpp"

namespace fmra {

enum class ShiftKind {
  Zeta1,  // uniform on [-1, 1]
  Zeta2,  // density proportional to f1 on [-1, 1]
  Zero    // degenerate at 0 (noiseless pipeline checks)
};

inline const char* shift_name(ShiftKind k) {
  switch (k) {
    case ShiftKind::Zeta1: return "zeta1";
    case ShiftKind::Zeta2: return "zeta2";
    case ShiftKind::Zero: return "zero";
  }
  return "?";
}

inline ShiftKind shift_from_name(const std::string& s) {
  if (s == "zeta1") return ShiftKind::Zeta1;
  if (s == "zeta2") return ShiftKind::Zeta2;
  if (s == "zero") return ShiftKind::Zero;
  throw std::invalid_argument("unknown shift distribution: " + s);
}

class ShiftDistribution {
 public:
  static constexpr int kTableSize = 10000;

  explicit ShiftDistribution(ShiftKind kind) : kind_(kind) {
    if (kind_ != ShiftKind::Zeta2) return;
    // CDF of f1 normalized to integrate to 1, tabulated on a uniform grid;
    // sampling inverts the table with linear interpolation.
    const SignalSpec f1 = SignalSpec::make(SignalKind::F1);
    xs_.resize(kTableSize);
    cdf_.resize(kTableSize);
    const double dx = 2.0 / (kTableSize - 1);
    double acc = 0.0;
    double prev = eval_signal(f1, -1.0);
    xs_[0] = -1.0;
    cdf_[0] = 0.0;
    for (int i = 1; i < kTableSize; ++i) {
      xs_[i] = -1.0 + i * dx;
      const double cur = eval_signal(f1, xs_[i]);
      acc += 0.5 * dx * (prev + cur);
      cdf_[i] = acc;
      prev = cur;
    }
    for (double& c : cdf_) c /= acc;
  }

  ShiftKind kind() const { return kind_; }

  double sample(Rng& rng) const {
    switch (kind_) {
      case ShiftKind::Zeta1: return rng.uniform(-1.0, 1.0);
      case ShiftKind::Zero: return 0.0;
      case ShiftKind::Zeta2: {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return xs_.front();
        if (it == cdf_.end()) return xs_.back();
        const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
        const double c0 = cdf_[i - 1], c1 = cdf_[i];
        const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
        return xs_[i - 1] + frac * (xs_[i] - xs_[i - 1]);
      }
    }
    return 0.0;
  }

 private:
  ShiftKind kind_;
  std::vector<double> xs_;
  std::vector<double> cdf_;
};

inline std::vector<double> sample_shifts(const ShiftDistribution& dist, std::size_t n,
                                         Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_shifts: n must be >= 1");
  std::vector<double> out(n);
  for (auto& s : out) s = dist.sample(rng);
  return out;
}

}  // namespace fmra
