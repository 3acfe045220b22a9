#pragma once

#include "zimp/common.hpp"

namespace zimp {

// Minimum-norm least-squares solution of A x ~= b via SVD, singular values
// below rcond * sigma_max treated as zero.
Vector minnorm_solve(const Matrix& A, const Vector& b, double rcond = 1e-10);

// Moore-Penrose pseudo-inverse with the same cutoff convention.
Matrix pseudo_inverse(const Matrix& A, double rcond = 1e-10);

struct PsdSolve {
  Vector x;
  double lambda_min = 0;  // smallest eigenvalue of A
  bool invertible = false;
};

// Solves A x = b for symmetric PSD A through its eigendecomposition and
// reports the smallest eigenvalue; x is empty when A is singular at the
// relative tolerance.
PsdSolve psd_solve(const Matrix& A, const Vector& b, double rel_tol = 1e-12);

// Inverse standard normal CDF (rational approximation polished with one
// Halley step on erfc; |error| < 1e-14 on (0,1)).
double normal_quantile(double p);

}  // namespace zimp
