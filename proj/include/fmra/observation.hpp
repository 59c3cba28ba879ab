#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fmra/grid.hpp"
#include "fmra/noise.hpp"
#include "fmra/rng.hpp"
#include "fmra/shifts.hpp"
#include "fmra/signals.hpp"

namespace fmra {

struct ObservationBatch {
  SpaceGrid grid;
  std::vector<SampledField> fields;
  std::vector<double> shifts;  // diagnostics only
  std::uint64_t seed = 0;
};

// y_n(t_j) = f(t_j - zeta_n) + eta_n(t_j) on the physical window; zero padding
// elsewhere. Each observation uses its own substream keyed by (seed, index),
// so chunked generation is bit-identical to one-shot generation.
inline ObservationBatch generate_batch(const SignalSpec& spec,
                                       const ShiftDistribution& dist,
                                       const NoiseModel& model, const SpaceGrid& grid,
                                       std::size_t n, std::uint64_t seed,
                                       std::size_t first_index = 0) {
  if (n < 1) throw std::invalid_argument("generate_batch: n must be >= 1");
  if (!(model.grid() == grid))
    throw std::invalid_argument("generate_batch: noise model grid mismatch");
  ObservationBatch batch;
  batch.grid = grid;
  batch.seed = seed;
  batch.fields.reserve(n);
  batch.shifts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(first_index + i)));
    const double zeta = dist.sample(rng);
    SampledField y = sample_signal(spec, grid, zeta);
    if (model.sigma() > 0.0) model.draw_into(y, rng);
    batch.fields.push_back(std::move(y));
    batch.shifts.push_back(zeta);
  }
  return batch;
}

}  // namespace fmra
