#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "chanest/channel_model.hpp"
#include "chanest/cpu_clock.hpp"
#include "chanest/errors.hpp"
#include "chanest/projection.hpp"
#include "chanest/types.hpp"

namespace chanest {

struct GreedyParams {
  int target_sparsity = 1;
  int max_iterations = 50;
  double residual_tolerance = 1e-12;  ///< absolute stop on |y - X h|

  void validate() const {
    if (target_sparsity < 1)
      throw std::invalid_argument("greedy: target_sparsity must be >= 1");
    if (max_iterations < 1)
      throw std::invalid_argument("greedy: max_iterations must be >= 1");
    if (!(residual_tolerance >= 0.0))
      throw std::invalid_argument("greedy: residual_tolerance must be >= 0");
  }
};

struct LassoParams {
  /// Regularization weight in |y - X h|^2 + lambda |h|_1. Unset: a universal
  /// threshold derived from the recorded noise level (see default_lasso_lambda).
  std::optional<double> lambda{};
  int max_iterations = 500;
  double objective_tolerance = 1e-9;  ///< relative objective decrease stop
  /// Proximal-gradient step; must not exceed 1 / |X|_op^2. Unset: estimated
  /// from the operator norm with a safety margin.
  std::optional<double> step_size{};
  bool accelerate = false;  ///< momentum (FISTA-style) iteration; non-monotone

  void validate() const {
    if (lambda && !(*lambda > 0.0))
      throw std::invalid_argument("lasso: lambda must be positive");
    if (max_iterations < 1)
      throw std::invalid_argument("lasso: max_iterations must be >= 1");
    if (!(objective_tolerance >= 0.0))
      throw std::invalid_argument("lasso: objective_tolerance must be >= 0");
    if (step_size && !(*step_size > 0.0))
      throw std::invalid_argument("lasso: step_size must be positive");
  }
};

namespace detail {

inline CMatrix select_columns(const CMatrix& matrix, const std::vector<int>& indices) {
  CMatrix sub(matrix.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = matrix.col(indices[k]);
  }
  return sub;
}

/// Least-squares coefficients restricted to the given columns, via the normal
/// equations. Throws numerical_rank_error when the subset Gram matrix has an
/// eigenvalue below rank_tolerance times its largest.
inline CVector restricted_least_squares(const CMatrix& matrix, const std::vector<int>& indices,
                                        const CVector& observation,
                                        double rank_tolerance = 1e-12) {
  if (indices.empty()) return CVector(0);
  const CMatrix sub = select_columns(matrix, indices);
  const CMatrix gram = sub.adjoint() * sub;
  Eigen::SelfAdjointEigenSolver<CMatrix> eigensolver(gram, Eigen::EigenvaluesOnly);
  const auto& eigenvalues = eigensolver.eigenvalues();
  const double largest = eigenvalues(eigenvalues.size() - 1);
  if (!(largest > 0.0) || eigenvalues(0) < rank_tolerance * largest)
    throw numerical_rank_error("restricted least squares: column subset is rank deficient");
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw numerical_rank_error("restricted least squares: Cholesky factorization failed");
  return llt.solve(sub.adjoint() * observation);
}

/// Indices of the `count` largest-magnitude entries, ties broken toward the
/// smaller index; returned sorted ascending.
inline std::vector<int> top_magnitude_indices(const CVector& values, int count) {
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  const int keep = std::min<int>(count, static_cast<int>(values.size()));
  std::stable_sort(order.begin(), order.end(), [&values](int a, int b) {
    return std::abs(values(a)) > std::abs(values(b));
  });
  order.resize(static_cast<std::size_t>(std::max(keep, 0)));
  std::sort(order.begin(), order.end());
  return order;
}

/// Upper bound on |X|_op^2 via power iteration on the smaller Gram matrix,
/// inflated by 5% to keep 1/bound a valid proximal step.
inline double op_norm_squared_upper(const CMatrix& matrix) {
  const bool rows_smaller = matrix.rows() <= matrix.cols();
  const CMatrix gram = rows_smaller ? CMatrix(matrix * matrix.adjoint())
                                    : CMatrix(matrix.adjoint() * matrix);
  CVector v = CVector::Ones(gram.rows());
  v /= v.norm();
  double eigenvalue = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    CVector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return std::numeric_limits<double>::min();
    eigenvalue = norm;  // |gram v| -> lambda_max for unit v
    v = w / norm;
  }
  return 1.05 * eigenvalue;
}

inline void warn_cosamp_ratio(int target, Eigen::Index rows) {
  static std::once_flag flag;
  std::call_once(flag, [target, rows] {
    std::fprintf(stderr,
                 "cosamp_solve: 3 * target_sparsity = %d exceeds the measurement count %ld; "
                 "identification is unreliable in this regime\n",
                 3 * target, static_cast<long>(rows));
  });
}

}  // namespace detail

/// Minimum-norm least-squares estimate X^H (X X^H)^{-1} y. Sparsity-agnostic
/// baseline; requires numerically full row rank.
inline Estimate ls_min_norm(const EstimationProblem& problem) {
  const double start = thread_cpu_seconds();
  RowSpaceProjector projector(problem.matrix.entries);
  CVector taps = projector.min_norm_solution(problem.observation);
  return Estimate{std::move(taps), 1, 0.0, thread_cpu_seconds() - start, "ls"};
}

/// Genie-aided bound: least squares restricted to the true support, zeros
/// elsewhere. The support must hold at most rows() distinct valid indices.
inline Estimate oracle_estimate(const EstimationProblem& problem,
                                const std::vector<int>& true_support) {
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  if (static_cast<Eigen::Index>(true_support.size()) > matrix.rows())
    throw std::invalid_argument("oracle_estimate: support larger than the measurement count");
  std::vector<int> support = true_support;
  std::sort(support.begin(), support.end());
  if (!support.empty()) {
    if (support.front() < 0 || support.back() >= matrix.cols())
      throw std::invalid_argument("oracle_estimate: support index out of range");
    if (std::adjacent_find(support.begin(), support.end()) != support.end())
      throw std::invalid_argument("oracle_estimate: duplicate support index");
  }

  CVector taps = CVector::Zero(matrix.cols());
  if (!support.empty()) {
    const CVector coefficients =
        detail::restricted_least_squares(matrix, support, problem.observation);
    for (std::size_t k = 0; k < support.size(); ++k) {
      taps(support[k]) = coefficients(static_cast<Eigen::Index>(k));
    }
  }
  return Estimate{std::move(taps), 1, 0.0, thread_cpu_seconds() - start, "oracle"};
}

/// Orthogonal matching pursuit: greedily selects the column most correlated
/// with the residual, then re-solves least squares on the selected set. Stops
/// at target_sparsity selections, at max_iterations, or once the residual
/// falls below the tolerance (or its machine-precision floor).
inline Estimate omp_solve(const EstimationProblem& problem, const GreedyParams& params) {
  params.validate();
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  const CVector& observation = problem.observation;
  if (params.target_sparsity > matrix.cols())
    throw std::invalid_argument("omp_solve: target_sparsity exceeds column count");

  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * observation.norm();
  const double stop = std::max(params.residual_tolerance, floor);
  const int limit = std::min(params.target_sparsity, params.max_iterations);

  std::vector<int> selected;
  selected.reserve(static_cast<std::size_t>(limit));
  std::vector<char> in_set(static_cast<std::size_t>(matrix.cols()), 0);
  CVector residual = observation;
  CVector coefficients;
  int iterations = 0;

  while (static_cast<int>(selected.size()) < limit && residual.norm() > stop) {
    const CVector correlation = matrix.adjoint() * residual;
    Eigen::Index best = 0;
    correlation.cwiseAbs().maxCoeff(&best);
    if (in_set[static_cast<std::size_t>(best)])
      throw std::logic_error("omp_solve: residual re-selected a column already in the active set");
    in_set[static_cast<std::size_t>(best)] = 1;
    selected.push_back(static_cast<int>(best));

    const CMatrix sub = detail::select_columns(matrix, selected);
    coefficients = sub.colPivHouseholderQr().solve(observation);
    residual = observation - sub * coefficients;
    ++iterations;
  }

  CVector taps = CVector::Zero(matrix.cols());
  for (std::size_t k = 0; k < selected.size(); ++k) {
    taps(selected[k]) = coefficients(static_cast<Eigen::Index>(k));
  }
  return Estimate{std::move(taps), iterations, 0.0, thread_cpu_seconds() - start, "omp"};
}

/// Compressive sampling matching pursuit. Each round merges the 2T strongest
/// residual-proxy columns with the current support, solves least squares on
/// the merged set, prunes to the T largest coefficients, and updates the
/// residual; stops on residual tolerance, stagnation (relative residual
/// change below 1e-6), or max_iterations. Warns once per process when
/// 3 * target_sparsity exceeds the measurement count; in that regime the
/// candidate count is capped so the merged set never exceeds the measurement
/// count, keeping the restricted solve determined.
inline Estimate cosamp_solve(const EstimationProblem& problem, const GreedyParams& params) {
  params.validate();
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  const CVector& observation = problem.observation;
  if (params.target_sparsity > matrix.cols())
    throw std::invalid_argument("cosamp_solve: target_sparsity exceeds column count");
  if (3 * params.target_sparsity > matrix.rows())
    detail::warn_cosamp_ratio(params.target_sparsity, matrix.rows());

  std::vector<int> support;
  CVector values;
  CVector residual = observation;
  double previous_norm = residual.norm();
  int iterations = 0;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    if (residual.norm() <= params.residual_tolerance) break;

    const CVector proxy = matrix.adjoint() * residual;
    const int room = static_cast<int>(matrix.rows()) - static_cast<int>(support.size());
    const int candidates = std::min(2 * params.target_sparsity, std::max(room, 0));
    std::vector<int> merged = detail::top_magnitude_indices(proxy, candidates);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const CVector coefficients =
        detail::restricted_least_squares(matrix, merged, observation);
    const std::vector<int> keep =
        detail::top_magnitude_indices(coefficients, params.target_sparsity);
    support.clear();
    values.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      support.push_back(merged[static_cast<std::size_t>(keep[k])]);
      values(static_cast<Eigen::Index>(k)) = coefficients(keep[k]);
    }

    residual = observation - detail::select_columns(matrix, support) * values;
    ++iterations;

    const double current_norm = residual.norm();
    if (std::abs(previous_norm - current_norm) < 1e-6 * previous_norm) break;
    previous_norm = current_norm;
  }

  CVector taps = CVector::Zero(matrix.cols());
  for (std::size_t k = 0; k < support.size(); ++k) {
    taps(support[k]) = values(static_cast<Eigen::Index>(k));
  }
  return Estimate{std::move(taps), iterations, 0.0, thread_cpu_seconds() - start, "cosamp"};
}

/// Default regularization weight for lasso_solve: the universal threshold
/// noise_std sqrt(2 log cols) scaled by the largest column norm, floored at
/// a small fraction of 2 |X^H y|_inf so noiseless runs stay strictly convex
/// toward a sparse solution instead of degenerating to lambda = 0.
inline double default_lasso_lambda(const EstimationProblem& problem) {
  const CMatrix& matrix = problem.matrix.entries;
  const double noise_std = std::sqrt(std::max(0.0, problem.noise.noise_variance));
  const double max_column_norm = matrix.colwise().norm().maxCoeff();
  const double universal =
      noise_std * std::sqrt(2.0 * std::log(static_cast<double>(matrix.cols()))) *
      max_column_norm;
  const double peak_correlation =
      (matrix.adjoint() * problem.observation).cwiseAbs().maxCoeff();
  const double floor = 1e-4 * 2.0 * peak_correlation;
  return std::max(universal, floor);
}

/// l1-regularized least squares, min |y - X h|^2 + lambda |h|_1, by proximal
/// gradient iteration with the complex soft-threshold prox. Stops once the
/// relative objective decrease falls below objective_tolerance. A non-finite
/// objective raises solver_divergence_error.
inline Estimate lasso_solve(const EstimationProblem& problem, const LassoParams& params = {}) {
  params.validate();
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  const CVector& observation = problem.observation;

  const double lambda = params.lambda ? *params.lambda : default_lasso_lambda(problem);
  const double step =
      params.step_size ? *params.step_size : 1.0 / detail::op_norm_squared_upper(matrix);
  const double threshold = step * lambda / 2.0;

  CVector taps = CVector::Zero(matrix.cols());
  CVector residual = observation;  // y - X h, maintained across iterations
  double objective = residual.squaredNorm();

  CVector momentum = taps;
  double momentum_weight = 1.0;
  int iterations = 0;

  const auto soft_threshold = [threshold](Complex value) {
    const double magnitude = std::abs(value);
    if (magnitude <= threshold) return Complex(0.0, 0.0);
    return value * ((magnitude - threshold) / magnitude);
  };

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    CVector next;
    if (params.accelerate) {
      const CVector point_residual = observation - matrix * momentum;
      next = (momentum + step * (matrix.adjoint() * point_residual))
                 .unaryExpr(soft_threshold);
    } else {
      next = (taps + step * (matrix.adjoint() * residual)).unaryExpr(soft_threshold);
    }
    CVector next_residual = observation - matrix * next;
    const double next_objective =
        next_residual.squaredNorm() + lambda * next.cwiseAbs().sum();
    if (!std::isfinite(next_objective))
      throw solver_divergence_error("lasso_solve: objective became non-finite", 0.0);

    if (params.accelerate) {
      const double next_weight =
          (1.0 + std::sqrt(1.0 + 4.0 * momentum_weight * momentum_weight)) / 2.0;
      momentum = next + ((momentum_weight - 1.0) / next_weight) * (next - taps);
      momentum_weight = next_weight;
    }

    const double decrease = std::abs(objective - next_objective);
    taps = std::move(next);
    residual = std::move(next_residual);
    objective = next_objective;
    ++iterations;
    if (decrease < params.objective_tolerance * std::max(objective, 1e-30)) break;
  }
  return Estimate{std::move(taps), iterations, 0.0, thread_cpu_seconds() - start, "lasso"};
}

/// Exact l0 reference: enumerates every support of the given size, solves
/// least squares on each, and returns the residual minimizer (first such
/// support in lexicographic order on ties). Guarded to cols <= 16 and
/// sparsity <= 4; sparsity 0 returns the zero estimate.
inline Estimate brute_force_l0(const EstimationProblem& problem, int sparsity) {
  const double start = thread_cpu_seconds();
  const CMatrix& matrix = problem.matrix.entries;
  const CVector& observation = problem.observation;
  const int cols = static_cast<int>(matrix.cols());
  if (cols > 16)
    throw std::invalid_argument("brute_force_l0: limited to 16 columns");
  if (sparsity < 0 || sparsity > 4)
    throw std::invalid_argument("brute_force_l0: sparsity must lie in [0, 4]");
  if (sparsity > cols)
    throw std::invalid_argument("brute_force_l0: sparsity exceeds column count");

  CVector best_taps = CVector::Zero(cols);
  int evaluated = 0;

  if (sparsity > 0) {
    double best_residual = std::numeric_limits<double>::infinity();
    std::vector<int> combo(static_cast<std::size_t>(sparsity));
    std::iota(combo.begin(), combo.end(), 0);
    while (true) {
      const CMatrix sub = detail::select_columns(matrix, combo);
      const CVector coefficients = sub.colPivHouseholderQr().solve(observation);
      const double residual = (observation - sub * coefficients).squaredNorm();
      ++evaluated;
      if (residual < best_residual) {
        best_residual = residual;
        best_taps.setZero();
        for (std::size_t k = 0; k < combo.size(); ++k) {
          best_taps(combo[k]) = coefficients(static_cast<Eigen::Index>(k));
        }
      }
      int i = sparsity - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == cols - sparsity + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < sparsity; ++j) {
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return Estimate{std::move(best_taps), evaluated, 0.0, thread_cpu_seconds() - start,
                  "brute_force_l0"};
}

}  // namespace chanest
