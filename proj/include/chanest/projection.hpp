#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "chanest/errors.hpp"
#include "chanest/types.hpp"

namespace chanest {

/// Orthogonal projection machinery for the affine set {h : X h = y}, built on
/// a Cholesky factorization of the measurement Gram matrix X X^H. The Gram
/// matrix must be numerically full rank: its smallest eigenvalue may not fall
/// below rank_tolerance times its largest.
class RowSpaceProjector {
 public:
  explicit RowSpaceProjector(CMatrix matrix, double rank_tolerance = 1e-12)
      : matrix_(std::move(matrix)) {
    const CMatrix gram = matrix_ * matrix_.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> eigensolver(gram, Eigen::EigenvaluesOnly);
    const auto& eigenvalues = eigensolver.eigenvalues();  // ascending
    const double largest = eigenvalues(eigenvalues.size() - 1);
    if (!(largest > 0.0) || eigenvalues(0) < rank_tolerance * largest)
      throw numerical_rank_error("row-space projector: measurement rows are numerically rank deficient");
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success)
      throw numerical_rank_error("row-space projector: Cholesky factorization of X X^H failed");
  }

  /// X^H (X X^H)^{-1} r: the minimum-norm tap perturbation whose image under
  /// X equals r. Subtracting it from h removes residual r from X h.
  CVector correction(const CVector& residual) const {
    return matrix_.adjoint() * llt_.solve(residual);
  }

  /// Nearest point to `taps` (in Euclidean norm) satisfying X h = observation.
  CVector project(const CVector& taps, const CVector& observation) const {
    return taps - correction(matrix_ * taps - observation);
  }

  /// Minimum-norm solution of X h = observation.
  CVector min_norm_solution(const CVector& observation) const {
    return matrix_.adjoint() * llt_.solve(observation);
  }

  const CMatrix& matrix() const { return matrix_; }

 private:
  CMatrix matrix_;
  Eigen::LLT<CMatrix> llt_;
};

}  // namespace chanest
