#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/cpu_clock.hpp"
#include "chanest/errors.hpp"
#include "chanest/projection.hpp"
#include "chanest/types.hpp"

namespace chanest {

/// Gaussian zero-indicator exp(-|tap|^2 / 2 sigma^2). Tends to 1 - sgn|tap|
/// as sigma -> 0; underflow to 0 for |tap| >> sigma is acceptable.
inline double gaussian_surrogate(Complex tap, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_surrogate: sigma must be positive");
  return std::exp(-std::norm(tap) / (2.0 * sigma * sigma));
}

/// J_sigma(h): sum of the Gaussian zero-indicators over all taps. The vector
/// length minus this value is a smooth surrogate for the l0 norm.
inline double smoothness_measure(const CVector& taps, double sigma) {
  if (taps.size() == 0) throw std::invalid_argument("smoothness_measure: empty tap vector");
  if (!(sigma > 0.0)) throw std::invalid_argument("smoothness_measure: sigma must be positive");
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (Eigen::Index i = 0; i < taps.size(); ++i) {
    total += std::exp(-std::norm(taps(i)) * inv_two_sigma_sq);
  }
  return total;
}

/// Entrywise h_i exp(-|h_i|^2 / 2 sigma^2). The Wirtinger gradient of
/// J_sigma with respect to conj(h_i) is -d_i / (2 sigma^2); equivalently the
/// real gradient with respect to (Re h_i, Im h_i) is -d_i / sigma^2. Scaled
/// multiples of this vector are the steepest-ascent steps on J_sigma.
inline CVector ascent_direction(const CVector& taps, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("ascent_direction: sigma must be positive");
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  CVector direction(taps.size());
  for (Eigen::Index i = 0; i < taps.size(); ++i) {
    direction(i) = taps(i) * std::exp(-std::norm(taps(i)) * inv_two_sigma_sq);
  }
  return direction;
}

/// Orthogonal projection of `taps` onto {h : X h = observation}. Throws a
/// numerical_rank_error if the rows are rank deficient or the projected point
/// misses the constraint by more than `tolerance` relative to the data scale.
inline CVector feasible_projection(const CVector& taps, const EstimationProblem& problem,
                                   double tolerance = 1e-10) {
  const CMatrix& matrix = problem.matrix.entries;
  if (taps.size() != matrix.cols())
    throw std::invalid_argument("feasible_projection: tap length must match matrix columns");
  RowSpaceProjector projector(matrix);
  CVector projected = projector.project(taps, problem.observation);
  const double observation_norm = problem.observation.norm();
  const double scale = observation_norm > 0.0 ? observation_norm : std::max(1.0, taps.norm());
  if ((matrix * projected - problem.observation).norm() > tolerance * scale)
    throw numerical_rank_error("feasible_projection: projected point misses the constraint");
  return projected;
}

/// True when the residual correlation constraint |X^H (y - X h)|_inf <= epsilon2
/// holds. This is the dual-style feasibility test; epsilon2 must be >= 0.
inline bool correlation_constraint_satisfied(const CVector& taps, const EstimationProblem& problem,
                                             double epsilon2) {
  const CMatrix& matrix = problem.matrix.entries;
  if (taps.size() != matrix.cols())
    throw std::invalid_argument("correlation_constraint_satisfied: tap length must match matrix columns");
  const CVector correlation = matrix.adjoint() * (problem.observation - matrix * taps);
  return correlation.cwiseAbs().maxCoeff() <= epsilon2;
}

struct Msl0Params {
  double sigma_decay = 0.5;          ///< geometric schedule ratio, in (0, 1)
  double sigma_floor_factor = 0.125; ///< schedule stops below factor * noise scale
  int inner_iterations = 3;        ///< ascent/projection pairs per sigma level
  double step_size = 2.0;          ///< mu; dimensionless fraction of the ascent step
  int max_sigma_levels = 40;

  /// Residual ball radius epsilon1. Unset: residual_budget_factor *
  /// sqrt(rows) * noise_std, the expected noise norm with a safety margin.
  /// Zero tightens the method to the classic exact-constraint iteration.
  std::optional<double> residual_budget{};
  double residual_budget_factor = 1.1;

  /// Correlation budget epsilon2. When set, each sigma level additionally
  /// checks |X^H (y - X h)|_inf and the schedule stops once it holds.
  /// Mutually exclusive with residual_budget.
  std::optional<double> correlation_budget{};

  void validate() const {
    if (!(sigma_decay > 0.0) || !(sigma_decay < 1.0))
      throw std::invalid_argument("msl0: sigma_decay must lie in (0, 1)");
    if (!(sigma_floor_factor > 0.0))
      throw std::invalid_argument("msl0: sigma_floor_factor must be positive");
    if (inner_iterations < 1)
      throw std::invalid_argument("msl0: inner_iterations must be >= 1");
    if (!(step_size > 0.0))
      throw std::invalid_argument("msl0: step_size must be positive");
    if (max_sigma_levels < 1)
      throw std::invalid_argument("msl0: max_sigma_levels must be >= 1");
    if (residual_budget && *residual_budget < 0.0)
      throw std::invalid_argument("msl0: residual_budget must be >= 0");
    if (correlation_budget && *correlation_budget < 0.0)
      throw std::invalid_argument("msl0: correlation_budget must be >= 0");
    if (residual_budget && correlation_budget)
      throw std::invalid_argument("msl0: residual_budget and correlation_budget are mutually exclusive");
  }
};

/// Decreasing smoothing widths: sigma_1 = 2 max|h_i| of the initial estimate,
/// then geometric decay, stopping at max_sigma_levels or once sigma falls
/// below sigma_floor_factor times the noise scale (noise_std, or a machine
/// epsilon multiple of sigma_1 when noiseless). An all-zero initial estimate
/// yields an empty schedule.
inline std::vector<double> sigma_schedule(const CVector& initial_estimate, const Msl0Params& params,
                                          double noise_std = 0.0) {
  params.validate();
  if (!(noise_std >= 0.0))
    throw std::invalid_argument("sigma_schedule: noise_std must be >= 0");
  const double peak =
      initial_estimate.size() > 0 ? initial_estimate.cwiseAbs().maxCoeff() : 0.0;
  if (peak == 0.0) return {};

  const double first = 2.0 * peak;
  const double eps_scale = std::sqrt(std::numeric_limits<double>::epsilon()) * first;
  const double floor = params.sigma_floor_factor * std::max(noise_std, eps_scale);

  std::vector<double> schedule;
  double sigma = first;
  while (static_cast<int>(schedule.size()) < params.max_sigma_levels && sigma >= floor) {
    schedule.push_back(sigma);
    sigma *= params.sigma_decay;
  }
  return schedule;
}

/// Called after every projection with the current iterate and sigma level.
using Msl0Observer = std::function<void(const CVector& iterate, double sigma)>;

/// Graduated-smoothing sparse recovery. Starting from the minimum-norm
/// least-squares solution, each sigma level alternates steepest-ascent steps
/// on the smoothness measure with a relaxed projection that restores
/// |X h - y| <= epsilon1 (exact projection when epsilon1 = 0, no-op when the
/// iterate is already inside the ball). Iterate magnitudes beyond 1e150, or
/// any non-finite value, raise a solver_divergence_error.
inline Estimate msl0_solve(const EstimationProblem& problem, const Msl0Params& params = {},
                           const Msl0Observer& observer = {}) {
  params.validate();
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  const CVector& observation = problem.observation;
  constexpr double kIterateLimit = 1e150;

  RowSpaceProjector projector(matrix);
  CVector taps = projector.min_norm_solution(observation);

  const double noise_std = std::sqrt(std::max(0.0, problem.noise.noise_variance));
  const double epsilon1 =
      params.residual_budget
          ? *params.residual_budget
          : (params.correlation_budget
                 ? 0.0
                 : params.residual_budget_factor * std::sqrt(static_cast<double>(matrix.rows())) * noise_std);

  const std::vector<double> schedule = sigma_schedule(taps, params, noise_std);
  int steps = 0;
  double sigma_final = 0.0;
  for (double sigma : schedule) {
    for (int inner = 0; inner < params.inner_iterations; ++inner) {
      taps -= params.step_size * ascent_direction(taps, sigma);
      const CVector residual = matrix * taps - observation;
      const double residual_norm = residual.norm();
      if (residual_norm > epsilon1) {
        const double fraction = epsilon1 > 0.0 ? 1.0 - epsilon1 / residual_norm : 1.0;
        taps -= fraction * projector.correction(residual);
      }
      ++steps;
      if (!taps.allFinite() || taps.cwiseAbs().maxCoeff() > kIterateLimit)
        throw solver_divergence_error(
            "msl0_solve: iterate diverged at sigma = " + std::to_string(sigma), sigma);
      if (observer) observer(taps, sigma);
    }
    sigma_final = sigma;
    if (params.correlation_budget &&
        correlation_constraint_satisfied(taps, problem, *params.correlation_budget))
      break;
  }
  return Estimate{std::move(taps), steps, sigma_final, thread_cpu_seconds() - start, "msl0"};
}

}  // namespace chanest
