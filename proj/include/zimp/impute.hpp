#pragma once

#include "zimp/common.hpp"

namespace zimp {

// Ximp = P .* X.
Matrix impute_zero(const Matrix& X, const Matrix& P);

// Imputation strategies. Transforms never alter observed entries, and only
// observed entries of X are ever read.
class Imputer {
 public:
  enum class Kind { zero, optimal_constant, iterative_conditional };

  static Imputer zero();

  // Minimum-norm least squares on the augmented design [P .* X, P]. The
  // per-feature constants are recovered as (P-block coef) / (X-block coef),
  // zero when the X-block coefficient is numerically zero; prediction should
  // use the augmented model directly (predict_augmented).
  static Imputer fit_optimal_constant(const Matrix& X, const Matrix& P, const Vector& y);

  // Lightweight chained-equations stand-in: initialize missing entries with
  // observed column means, then for each round regress every column on the
  // others (ridge, observed rows only, columns in order 0..d-1) and rewrite
  // its missing entries with the predictions.
  static Imputer fit_iterative_conditional(const Matrix& X, const Matrix& P,
                                           int rounds, double ridge);

  Kind kind() const { return kind_; }
  bool fitted() const { return fitted_; }

  Matrix transform(const Matrix& X, const Matrix& P) const;

  // Optimal-constant accessors.
  const Vector& constants() const;
  const Vector& augmented_theta() const;  // 2d coefficients on [P .* X, P]
  Vector predict_augmented(const Matrix& Ximp, const Matrix& P) const;

 private:
  Imputer() = default;
  Kind kind_ = Kind::zero;
  bool fitted_ = false;
  // optimal constant
  Vector aug_theta_;
  Vector constants_;
  // iterative conditional
  Matrix col_weights_;     // row j: weights over the other columns (diagonal 0)
  Vector col_intercepts_;
  Vector col_means_;
  int rounds_ = 0;
  double ridge_ = 0;
};

}  // namespace zimp
