#pragma once

#include <complex>
#include <string>

#include <Eigen/Core>

namespace chanest {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Output of one solver run: recovered taps plus solver metadata.
struct Estimate {
  CVector taps;
  int iterations = 0;
  double sigma_final = 0.0;  ///< final smoothing width; 0 for non-graduated solvers
  double cpu_seconds = 0.0;
  std::string solver_name;
};

}  // namespace chanest
