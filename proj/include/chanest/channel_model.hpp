#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chanest/rng.hpp"
#include "chanest/types.hpp"

namespace chanest {

/// Ground-truth multipath channel: a length-L tap vector whose nonzero
/// entries sit exactly on `support`.
struct SparseChannel {
  CVector taps;
  std::vector<int> support;  ///< sorted indices of the nonzero taps

  int length() const { return static_cast<int>(taps.size()); }
  int sparsity() const { return static_cast<int>(support.size()); }
};

/// Number of nonzero entries.
inline int l0_norm(const CVector& taps) {
  int count = 0;
  for (Eigen::Index i = 0; i < taps.size(); ++i) {
    if (taps(i) != Complex(0.0, 0.0)) ++count;
  }
  return count;
}

/// Training operator. `entries` has unit-norm columns and is what every solver
/// sees. The columns are contiguous windows of `generator` (a Toeplitz
/// arrangement) divided by `column_scales`; both are empty when the matrix was
/// supplied externally rather than generated.
struct TrainingMatrix {
  CMatrix entries;
  CVector generator;
  RVector column_scales;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }

  static TrainingMatrix from_entries(CMatrix matrix) {
    return TrainingMatrix{std::move(matrix), {}, {}};
  }
};

struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();
  double noise_variance = 0.0;  ///< E|z_i|^2 per complex measurement; 0 when noiseless
};

/// One estimation instance: observation = entries * taps + noise.
/// `truth` is present for simulated instances and absent for field data.
struct EstimationProblem {
  TrainingMatrix matrix;
  CVector observation;
  NoiseSpec noise;
  std::optional<SparseChannel> truth;
};

/// Draws a sparse channel: support chosen uniformly among size-`sparsity`
/// subsets, taps circular complex Gaussian with per-component deviation
/// `tap_std`. Identical (length, sparsity, tap_std, seed) reproduce the
/// channel bit for bit.
inline SparseChannel generate_channel(int length, int sparsity, double tap_std,
                                      std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("generate_channel: length must be >= 1");
  if (sparsity < 0 || sparsity > length)
    throw std::invalid_argument("generate_channel: sparsity must lie in [0, length]");
  if (!(tap_std > 0.0))
    throw std::invalid_argument("generate_channel: tap_std must be positive");

  std::mt19937_64 engine(mix64(seed));

  // Partial Fisher-Yates: the first `sparsity` slots become the support.
  std::vector<int> indices(static_cast<std::size_t>(length));
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = 0; i < sparsity; ++i) {
    std::uniform_int_distribution<int> pick(i, length - 1);
    std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(pick(engine))]);
  }
  std::vector<int> support(indices.begin(), indices.begin() + sparsity);
  std::sort(support.begin(), support.end());

  std::normal_distribution<double> component(0.0, tap_std);
  CVector taps = CVector::Zero(length);
  for (int idx : support) {
    const double re = component(engine);
    const double im = component(engine);
    taps(idx) = Complex(re, im);
  }
  return SparseChannel{std::move(taps), std::move(support)};
}

/// Builds the training matrix from a fresh unit-variance complex Gaussian
/// generator sequence of length rows + cols - 1. Before normalization the
/// matrix is Toeplitz: entry (i, j) equals generator(i - j + cols - 1).
inline TrainingMatrix generate_training(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("generate_training: dimensions must be >= 1");

  std::mt19937_64 engine(mix64(seed));
  std::normal_distribution<double> component(0.0, 1.0);

  CVector generator(rows + cols - 1);
  for (Eigen::Index k = 0; k < generator.size(); ++k) {
    const double re = component(engine);
    const double im = component(engine);
    generator(k) = Complex(re, im);
  }

  CMatrix entries(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      entries(i, j) = generator(i - j + cols - 1);
    }
  }

  RVector scales(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    scales(j) = entries.col(j).norm();
    // A window of rows consecutive Gaussian draws is zero with probability 0.
    if (!(scales(j) > 0.0))
      throw std::runtime_error("generate_training: degenerate zero column");
    entries.col(j) /= scales(j);
  }
  return TrainingMatrix{std::move(entries), std::move(generator), std::move(scales)};
}

/// Applies the training operator to the channel and adds circular complex
/// AWGN calibrated against the empirical per-measurement signal power
/// |X h|^2 / rows. snr_db = +infinity yields the noiseless observation.
inline EstimationProblem synthesize_measurement(const TrainingMatrix& matrix,
                                                const SparseChannel& channel,
                                                double snr_db, std::uint64_t seed) {
  if (matrix.cols() != channel.length())
    throw std::invalid_argument("synthesize_measurement: matrix columns must match channel length");
  if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0.0))
    throw std::invalid_argument("synthesize_measurement: snr_db must be finite or +infinity");

  CVector clean = matrix.entries * channel.taps;

  if (std::isinf(snr_db)) {
    return EstimationProblem{matrix, std::move(clean),
                             NoiseSpec{snr_db, 0.0}, channel};
  }

  const double signal_power = clean.squaredNorm() / static_cast<double>(matrix.rows());
  if (signal_power == 0.0)
    throw std::invalid_argument("synthesize_measurement: zero signal power at finite snr");

  const double noise_variance = signal_power / std::pow(10.0, snr_db / 10.0);
  const double component_std = std::sqrt(noise_variance / 2.0);

  std::mt19937_64 engine(mix64(seed));
  std::normal_distribution<double> component(0.0, component_std);
  CVector observation(clean.size());
  for (Eigen::Index i = 0; i < observation.size(); ++i) {
    const double re = component(engine);
    const double im = component(engine);
    observation(i) = clean(i) + Complex(re, im);
  }
  return EstimationProblem{matrix, std::move(observation),
                           NoiseSpec{snr_db, noise_variance}, channel};
}

}  // namespace chanest
