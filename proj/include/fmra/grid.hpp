#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fmra {

using Complex = std::complex<double>;

// Uniform spatial grid on [-B*a, B*a) with spacing delta. The observation
// support is [-a, a]; the remaining points are zero padding. The right
// endpoint is excluded so the point count is even and 0 is an exact grid
// point, which keeps the grid FFT-compatible.
struct SpaceGrid {
  double half_width = 2.0;
  double spacing = std::pow(2.0, -5);
  int padding_factor = 10;

  SpaceGrid() = default;
  SpaceGrid(double a, double delta, int B)
      : half_width(a), spacing(delta), padding_factor(B) {
    if (a <= 0.0 || delta <= 0.0 || B < 1)
      throw std::invalid_argument("SpaceGrid: parameters must be positive");
    const double ratio = a / delta;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw std::invalid_argument("SpaceGrid: spacing must divide half_width exactly");
  }

  int count() const {
    return static_cast<int>(std::llround(2.0 * padding_factor * half_width / spacing));
  }
  double point(int j) const { return -padding_factor * half_width + j * spacing; }
  int zero_index() const { return count() / 2; }

  // indices whose points lie in the observation support [-a, a]
  int physical_begin() const {
    return zero_index() - static_cast<int>(std::llround(half_width / spacing));
  }
  int physical_end() const {  // inclusive of +a
    return zero_index() + static_cast<int>(std::llround(half_width / spacing)) + 1;
  }
  int physical_count() const { return physical_end() - physical_begin(); }

  bool operator==(const SpaceGrid& o) const {
    return half_width == o.half_width && spacing == o.spacing &&
           padding_factor == o.padding_factor;
  }
};

// Frequency grid derived from a SpaceGrid: count points in ascending order,
// 0 centered at index count/2, spacing 2*pi/(M*delta).
struct FreqGrid {
  double spacing = 0.0;
  int count = 0;
  double max_freq = 0.0;

  FreqGrid() = default;
  explicit FreqGrid(const SpaceGrid& g)
      : spacing(2.0 * std::numbers::pi / (g.count() * g.spacing)),
        count(g.count()),
        max_freq(std::numbers::pi / g.spacing) {}

  double point(int k) const { return (k - count / 2) * spacing; }
  int zero_index() const { return count / 2; }

  bool operator==(const FreqGrid& o) const {
    return spacing == o.spacing && count == o.count;
  }
};

struct SampledField {
  SpaceGrid grid;
  std::vector<double> values;

  SampledField() = default;
  explicit SampledField(const SpaceGrid& g)
      : grid(g), values(static_cast<std::size_t>(g.count()), 0.0) {}
  SampledField(const SpaceGrid& g, std::vector<double> v)
      : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != g.count())
      throw std::invalid_argument("SampledField: value count does not match grid");
  }
};

struct Spectrum {
  FreqGrid grid;
  std::vector<Complex> values;

  Spectrum() = default;
  explicit Spectrum(const FreqGrid& g)
      : grid(g), values(static_cast<std::size_t>(g.count), Complex{0.0, 0.0}) {}
  Spectrum(const FreqGrid& g, std::vector<Complex> v)
      : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != g.count)
      throw std::invalid_argument("Spectrum: value count does not match grid");
  }
};

}  // namespace fmra
