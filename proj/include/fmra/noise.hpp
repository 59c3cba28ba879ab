#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "fmra/grid.hpp"
#include "fmra/rng.hpp"

namespace fmra {

// Squared-exponential Gaussian process k(t,t') = sigma^2 exp(-(t-t')^2 / (2 lambda^2))
// on the observation support [-a, a] of a SpaceGrid. The Cholesky factor over
// the physical grid points is computed once and cached; it is immutable after
// construction, so the model is safe to share across threads.
class NoiseModel {
 public:
  NoiseModel(double sigma, double lambda, const SpaceGrid& grid)
      : sigma_(sigma), lambda_(lambda), grid_(grid) {
    if (sigma < 0.0 || lambda <= 0.0)
      throw std::invalid_argument("NoiseModel: need sigma >= 0 and lambda > 0");
    const int mp = grid.physical_count();
    chol_.setZero(mp, mp);
    if (sigma_ == 0.0) return;

    Eigen::MatrixXd cov(mp, mp);
    for (int i = 0; i < mp; ++i)
      for (int j = 0; j < mp; ++j)
        cov(i, j) = covariance(physical_point(i), physical_point(j));

    // The SE matrix is numerically rank-deficient for small lambda relative
    // to the spacing; escalate jitter from 1e-10 sigma^2 up to 1e-6 sigma^2.
    double jitter = 1e-10 * sigma_ * sigma_;
    const double jitter_max = 1e-6 * sigma_ * sigma_;
    for (;;) {
      Eigen::LLT<Eigen::MatrixXd> llt(
          cov + jitter * Eigen::MatrixXd::Identity(mp, mp));
      if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        jitter_ = jitter;
        return;
      }
      jitter *= 10.0;
      if (jitter > jitter_max)
        throw std::runtime_error("NoiseModel: covariance matrix is not positive semidefinite");
    }
  }

  double sigma() const { return sigma_; }
  double lambda() const { return lambda_; }
  double jitter() const { return jitter_; }
  const SpaceGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }

  double covariance(double t, double s) const {
    const double d = t - s;
    return sigma_ * sigma_ * std::exp(-d * d / (2.0 * lambda_ * lambda_));
  }

  double physical_point(int i) const { return grid_.point(grid_.physical_begin() + i); }

  // One draw written into the physical window of a padded field.
  void draw_into(SampledField& field, Rng& rng) const {
    const int mp = grid_.physical_count();
    Eigen::VectorXd z(mp);
    for (int i = 0; i < mp; ++i) z(i) = rng.normal();
    Eigen::VectorXd eta = chol_ * z;
    const int off = grid_.physical_begin();
    for (int i = 0; i < mp; ++i) field.values[off + i] += eta(i);
  }

 private:
  double sigma_;
  double lambda_;
  double jitter_ = 0.0;
  SpaceGrid grid_;
  Eigen::MatrixXd chol_;
};

inline std::vector<SampledField> sample_noise(const NoiseModel& model,
                                              const SpaceGrid& grid, std::size_t n,
                                              Rng& rng) {
  if (!(model.grid() == grid))
    throw std::invalid_argument("sample_noise: model was built for a different grid");
  std::vector<SampledField> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledField f(grid);
    model.draw_into(f, rng);
    out.push_back(std::move(f));
  }
  return out;
}

// Frequency-domain diagonal of the noise covariance and its first-argument
// derivative, computed with the same quadrature as forward_cft so the
// discretization bias cancels against the empirical second moment:
//   diag(w)  = delta^2 sum_{j,l} k(t_j,t_l) exp(-i w (t_j - t_l))
//   ddiag(w) = delta^2 sum_{j,l} (-i t_j) k(t_j,t_l) exp(-i w (t_j - t_l))
// The sums run over the physical grid (the noise is zero on the padding) and
// are collapsed by stationarity to O(Mp) per frequency.
inline std::pair<std::vector<double>, std::vector<Complex>> noise_freq_diag(
    const NoiseModel& model, const SpaceGrid& grid) {
  const FreqGrid fg(grid);
  const int m = fg.count;
  std::vector<double> diag(static_cast<std::size_t>(m), 0.0);
  std::vector<Complex> ddiag(static_cast<std::size_t>(m), Complex{0.0, 0.0});
  if (model.sigma() == 0.0) return {diag, ddiag};

  const int mp = grid.physical_count();
  const double delta = grid.spacing;
  // k at lag m*delta, pair count, and sum of t_j over pairs with j - l = m
  std::vector<double> klag(mp), tsum(mp);
  for (int lag = 0; lag < mp; ++lag) {
    klag[lag] = model.covariance(lag * delta, 0.0);
    double s = 0.0;
    for (int j = lag; j < mp; ++j) s += model.physical_point(j);
    tsum[lag] = s;
  }
  for (int k = 0; k < m; ++k) {
    const double w = fg.point(k);
    double dsum = mp * klag[0];
    double gsum = 0.0;  // imaginary part contribution collapses to a real sum
    for (int lag = 1; lag < mp; ++lag) {
      const double c = std::cos(w * delta * lag);
      const double s = std::sin(w * delta * lag);
      dsum += 2.0 * (mp - lag) * klag[lag] * c;
      // t_j-sums over the +lag and -lag diagonals are negatives of each other
      gsum += 2.0 * klag[lag] * tsum[lag] * s;
    }
    diag[k] = delta * delta * dsum;
    ddiag[k] = Complex(-delta * delta * gsum, 0.0);
  }
  return {diag, ddiag};
}

// Monte-Carlo estimate of the paper's functional signal-to-noise ratio,
// 1 / (sigma * E[sup_t eta(t)]) for an l-infinity normalized signal.
inline double estimate_snr(const NoiseModel& model, const SpaceGrid& grid,
                           std::size_t mc_draws, Rng& rng) {
  if (model.sigma() == 0.0)
    throw std::invalid_argument("estimate_snr: undefined for sigma = 0");
  if (mc_draws < 100)
    throw std::invalid_argument("estimate_snr: need at least 100 draws");
  const int mp = grid.physical_count();
  double acc = 0.0;
  Eigen::VectorXd z(mp);
  for (std::size_t i = 0; i < mc_draws; ++i) {
    for (int j = 0; j < mp; ++j) z(j) = rng.normal();
    acc += (model.cholesky() * z).maxCoeff();
  }
  const double mean_sup = acc / static_cast<double>(mc_draws);
  return 1.0 / (model.sigma() * mean_sup);
}

}  // namespace fmra
