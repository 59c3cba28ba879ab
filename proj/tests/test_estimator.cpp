#include <cmath>
#include <numbers>

#include <doctest.h>

#include "fmra/estimator.hpp"
#include "fmra/fourier.hpp"
#include "fmra/noise.hpp"
#include "fmra/observation.hpp"

using namespace fmra;

namespace {

SpaceGrid default_grid() { return SpaceGrid(2.0, std::pow(2.0, -5), 10); }

const SignalSpec& spec_of(SignalKind k) {
  static const SignalSpec specs[4] = {
      SignalSpec::make(SignalKind::F1), SignalSpec::make(SignalKind::F2),
      SignalSpec::make(SignalKind::F3), SignalSpec::make(SignalKind::F4)};
  return specs[static_cast<int>(k)];
}

// analytic Psi diagonal for a signal: psi_hat = |f^ft|^2 and
// grad1 = (f^ft)' conj(f^ft), with a floor too low to activate
PsiDiagonal oracle_psi(const SignalSpec& spec, const FreqGrid& fg) {
  PsiDiagonal psi;
  psi.grid = fg;
  psi.reg_constant = 1e9;
  psi.sample_size = 1;
  psi.psi_hat.resize(fg.count);
  psi.grad1.resize(fg.count);
  const double dw = 1e-5;
  for (int k = 0; k < fg.count; ++k) {
    const double w = fg.point(k);
    const Complex ft = eval_signal_ft(spec, w);
    const Complex dft =
        (eval_signal_ft(spec, w + dw) - eval_signal_ft(spec, w - dw)) / (2.0 * dw);
    psi.psi_hat[k] = std::norm(ft);
    psi.grad1[k] = dft * std::conj(ft);
  }
  return psi;
}

ObservationBatch noise_only_batch(const NoiseModel& model, const SpaceGrid& grid,
                                  std::size_t n, std::uint64_t seed) {
  ObservationBatch batch;
  batch.grid = grid;
  batch.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(i)));
    SampledField f(grid);
    model.draw_into(f, rng);
    batch.fields.push_back(std::move(f));
    batch.shifts.push_back(0.0);
  }
  return batch;
}

}  // namespace

TEST_CASE("psi diagonal: noiseless, unshifted") {
  const SpaceGrid grid = default_grid();
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const NoiseModel model(0.0, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);
  const ObservationBatch batch =
      generate_batch(f2, ShiftDistribution(ShiftKind::Zero), model, grid, 4, 1);
  const PsiDiagonal psi = estimate_psi_diag(batch, nd, ng);
  for (int k = 0; k < psi.grid.count; ++k) {
    const double w = psi.grid.point(k);
    if (std::abs(w) > 20.0) continue;
    CHECK(std::abs(psi.psi_hat[k] - std::norm(eval_signal_ft(f2, w))) < 1e-4);
  }
}

TEST_CASE("psi diagonal: noiseless with uniform shifts") {
  const SpaceGrid grid = default_grid();
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const NoiseModel model(0.0, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);
  const ObservationBatch batch =
      generate_batch(f2, ShiftDistribution(ShiftKind::Zeta1), model, grid, 100000, 2);
  const PsiDiagonal psi = estimate_psi_diag(batch, nd, ng);
  for (int k = 0; k < psi.grid.count; ++k) {
    const double w = psi.grid.point(k);
    if (std::abs(w) > 10.0) continue;
    const double truth = std::norm(eval_signal_ft(f2, w));
    CHECK(std::abs(psi.psi_hat[k] - truth) < 0.02 * truth);
  }
}

TEST_CASE("psi diagonal: noise bias cancels") {
  const SpaceGrid grid = default_grid();
  const NoiseModel model(1.0, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);
  const ObservationBatch batch = noise_only_batch(model, grid, 100000, 3);
  const PsiDiagonal psi = estimate_psi_diag(batch, nd, ng);
  double peak = 0.0;
  for (double v : nd) peak = std::max(peak, v);
  for (double v : psi.psi_hat) CHECK(std::abs(v) < 0.05 * peak);
}

TEST_CASE("gradient modes agree on noiseless data") {
  const SpaceGrid grid = default_grid();
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const NoiseModel model(0.0, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);
  const ObservationBatch batch =
      generate_batch(f2, ShiftDistribution(ShiftKind::Zero), model, grid, 4, 1);
  const PsiDiagonal a =
      estimate_psi_diag(batch, nd, ng, 1.0, GradientMode::CentralDifference);
  const PsiDiagonal b =
      estimate_psi_diag(batch, nd, ng, 1.0, GradientMode::MomentWeighted);
  for (int k = 0; k < a.grid.count; ++k)
    CHECK(std::abs(a.grad1[k] - b.grad1[k]) < 1e-2);
}

TEST_CASE("psi diagonal is real") {
  // the accumulator builds psi_hat from |y^ft|^2 minus a real diagonal, so the
  // imaginary part is zero by construction; check the noise diagonal is real
  const SpaceGrid grid = default_grid();
  const auto [nd, ng] = noise_freq_diag(NoiseModel(0.5, 0.1, grid), grid);
  for (const Complex& v : ng) CHECK(v.imag() == 0.0);
}

TEST_CASE("regularize_psi arithmetic") {
  PsiDiagonal psi;
  psi.grid = FreqGrid(default_grid());

  SUBCASE("above the floor: unchanged") {
    psi.reg_constant = 1.0;
    psi.sample_size = 4;  // r sqrt(N) = 2
    psi.psi_hat.assign(psi.grid.count, 1.0);  // |psi| = 2/(r sqrt N) = 1
    const PsiDiagonal out = regularize_psi(psi);
    for (const Complex& v : out.psi_tilde) CHECK(v == Complex(1.0, 0.0));
  }
  SUBCASE("below the floor: magnitude lifted, sign preserved") {
    psi.reg_constant = 1000.0;
    psi.sample_size = 1;
    psi.psi_hat.assign(psi.grid.count, -1e-9);
    const PsiDiagonal out = regularize_psi(psi);
    for (const Complex& v : out.psi_tilde) {
      CHECK(std::abs(v) == doctest::Approx(1e-3).epsilon(1e-12));
      CHECK(v.real() < 0.0);
    }
  }
  SUBCASE("boundary of the min") {
    psi.reg_constant = 1.0;
    psi.sample_size = 1;
    psi.psi_hat.assign(psi.grid.count, 0.5);
    const PsiDiagonal out = regularize_psi(psi);
    for (const Complex& v : out.psi_tilde)
      CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("exact zero takes the positive floor value") {
    psi.reg_constant = 10.0;
    psi.sample_size = 100;
    psi.psi_hat.assign(psi.grid.count, 0.0);
    const PsiDiagonal out = regularize_psi(psi);
    for (const Complex& v : out.psi_tilde) CHECK(v == Complex(0.01, 0.0));
  }
  SUBCASE("floor invariant on mixed values") {
    psi.reg_constant = 0.01;
    psi.sample_size = 10000;  // r sqrt(N) = 1
    psi.psi_hat.resize(psi.grid.count);
    Rng rng(8);
    for (double& v : psi.psi_hat) v = 3.0 * (rng.uniform() - 0.5);
    const PsiDiagonal out = regularize_psi(psi);
    for (int k = 0; k < psi.grid.count; ++k) {
      const double mag = std::abs(out.psi_tilde[k]);
      CHECK(mag >= std::min(std::abs(psi.psi_hat[k]), 1.0) - 1e-12);
      if (std::abs(psi.psi_hat[k]) >= 1.0)
        CHECK(out.psi_tilde[k] == Complex(psi.psi_hat[k], 0.0));
      else
        CHECK(mag >= 1.0 - 1e-12);  // wherever the floor modifies psi_hat
    }
  }
}

TEST_CASE("rescale_at_zero") {
  const SpaceGrid grid = default_grid();
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const NoiseModel noiseless(0.0, 0.1, grid);

  SUBCASE("noiseless: recovers the signal mass, shift-invariantly") {
    const ObservationBatch batch = generate_batch(
        f2, ShiftDistribution(ShiftKind::Zeta1), noiseless, grid, 32, 9);
    const Complex c = rescale_at_zero(batch);
    CHECK(std::abs(c - eval_signal_ft(f2, 0.0)) < 1e-4);
  }
  SUBCASE("linearity under scaling") {
    ObservationBatch batch = generate_batch(
        f2, ShiftDistribution(ShiftKind::Zeta1), noiseless, grid, 8, 10);
    const Complex c = rescale_at_zero(batch);
    for (auto& f : batch.fields)
      for (double& v : f.values) v *= 3.0;
    CHECK(std::abs(rescale_at_zero(batch) - 3.0 * c) < 1e-12);
  }
  SUBCASE("pure noise: mass is near zero; exact zero errors out") {
    const NoiseModel model(1.0, 0.1, grid);
    const ObservationBatch noise = noise_only_batch(model, grid, 100000, 11);
    CHECK(std::abs(rescale_at_zero(noise)) < 0.05);
    ObservationBatch empty;
    empty.grid = grid;
    empty.fields.emplace_back(grid);  // all-zero field
    empty.shifts.push_back(0.0);
    CHECK_THROWS_AS(rescale_at_zero(empty), std::runtime_error);
  }
}

TEST_CASE("kotlarski_integrate: exact oracle input reproduces f2^ft") {
  const FreqGrid fg(default_grid());
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const PsiDiagonal psi = regularize_psi(oracle_psi(f2, fg));
  const FourierEstimate fe = kotlarski_integrate(psi, eval_signal_ft(f2, 0.0));
  CHECK(fe.spectrum.values[fg.zero_index()] == eval_signal_ft(f2, 0.0));
  for (int k = 0; k < fg.count; ++k) {
    const double w = fg.point(k);
    if (std::abs(w) > 20.0) continue;
    CHECK(std::abs(fe.spectrum.values[k] - eval_signal_ft(f2, w)) < 1e-3);
  }
}

TEST_CASE("kotlarski_integrate: synthetic integrands") {
  const FreqGrid fg(default_grid());
  PsiDiagonal psi;
  psi.grid = fg;
  psi.reg_constant = 1.0;
  psi.sample_size = 1;
  const Complex c_hat{0.8, 0.0};

  SUBCASE("zero log-derivative: constant output") {
    psi.psi_hat.assign(fg.count, 1.0);
    psi.psi_tilde.assign(fg.count, Complex(1.0, 0.0));
    psi.grad1.assign(fg.count, Complex(0.0, 0.0));
    const FourierEstimate fe = kotlarski_integrate(psi, c_hat);
    for (const Complex& v : fe.spectrum.values)
      CHECK(std::abs(v - c_hat) < 1e-12);
  }
  SUBCASE("constant log-derivative: exponential decay") {
    psi.psi_hat.assign(fg.count, 1.0);
    psi.psi_tilde.assign(fg.count, Complex(1.0, 0.0));
    psi.grad1.assign(fg.count, Complex(-1.0, 0.0));
    const FourierEstimate fe = kotlarski_integrate(psi, c_hat);
    for (int k = fg.zero_index(); k < fg.count; ++k) {
      const double w = fg.point(k);
      CHECK(std::abs(fe.spectrum.values[k] - c_hat * std::exp(-w)) <
            1e-6 * std::abs(c_hat));
    }
  }
  SUBCASE("unfilled psi_tilde rejected") {
    psi.psi_hat.assign(fg.count, 1.0);
    psi.grad1.assign(fg.count, Complex(0.0, 0.0));
    CHECK_THROWS_AS(kotlarski_integrate(psi, c_hat), std::invalid_argument);
  }
}

TEST_CASE("kotlarski_integrate: conjugate symmetry by construction") {
  const FreqGrid fg(default_grid());
  const PsiDiagonal psi =
      regularize_psi(oracle_psi(spec_of(SignalKind::F3), fg));
  const FourierEstimate fe =
      kotlarski_integrate(psi, eval_signal_ft(spec_of(SignalKind::F3), 0.0));
  const int k0 = fg.zero_index();
  for (int k = 0; k < k0; ++k) {
    const int mirror = 2 * k0 - k;
    if (mirror >= fg.count) continue;
    CHECK(fe.spectrum.values[k] == std::conj(fe.spectrum.values[mirror]));
  }
}

TEST_CASE("regularization bias: small r keeps high-frequency mass") {
  const SpaceGrid grid = default_grid();
  const FreqGrid fg(grid);
  const SignalSpec& f2 = spec_of(SignalKind::F2);
  const NoiseModel model(1.0, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);
  PsiAccumulator acc(fg, GradientMode::CentralDifference);
  acc.add(generate_batch(f2, ShiftDistribution(ShiftKind::Zeta1), model, grid,
                         16384, 21));
  const Complex c_hat = acc.zero_mean();
  const PsiDiagonal lo = regularize_psi(acc.finalize(nd, ng, 1e-4));
  const PsiDiagonal hi = regularize_psi(acc.finalize(nd, ng, 1.0));
  const Complex top_lo =
      kotlarski_integrate(lo, c_hat).spectrum.values[fg.count - 1];
  const Complex top_hi =
      kotlarski_integrate(hi, c_hat).spectrum.values[fg.count - 1];
  CHECK(std::abs(top_lo) > std::abs(top_hi));
}

TEST_CASE("accumulator chunking equals one-shot accumulation") {
  const SpaceGrid grid = default_grid();
  const FreqGrid fg(grid);
  const SignalSpec& f1 = spec_of(SignalKind::F1);
  const ShiftDistribution dist(ShiftKind::Zeta1);
  const NoiseModel model(0.5, 0.1, grid);
  const auto [nd, ng] = noise_freq_diag(model, grid);

  PsiAccumulator one(fg, GradientMode::CentralDifference);
  one.add(generate_batch(f1, dist, model, grid, 10, 99));
  PsiAccumulator two(fg, GradientMode::CentralDifference);
  two.add(generate_batch(f1, dist, model, grid, 6, 99, 0));
  two.add(generate_batch(f1, dist, model, grid, 4, 99, 6));

  const PsiDiagonal pa = one.finalize(nd, ng, 0.01);
  const PsiDiagonal pb = two.finalize(nd, ng, 0.01);
  CHECK(one.zero_mean() == two.zero_mean());
  for (int k = 0; k < fg.count; ++k) {
    CHECK(pa.psi_hat[k] == pb.psi_hat[k]);
    CHECK(pa.grad1[k] == pb.grad1[k]);
  }
}
