#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "zimp/common.hpp"

namespace zimp {

// Single-pass averaged SGD configuration. The dimension rule sets
// gamma = 1 / (kappa d L2hat sqrt(n)) with L2hat the largest empirical
// per-column second moment; kappa defaults to 1.
struct SgdConfig {
  enum class StepRule { fixed, dim_rule };
  StepRule rule = StepRule::dim_rule;
  double gamma = 0;   // step size when rule == fixed
  double kappa = 1.0; // dim-rule scale
  Vector theta0;      // empty means the origin
};

struct FitResult {
  Vector theta;
  std::string method;
  double hyperparameter = std::numeric_limits<double>::quiet_NaN();  // gamma or lambda
  double final_iterate_norm = std::numeric_limits<double>::quiet_NaN();
  double average_iterate_norm = std::numeric_limits<double>::quiet_NaN();
  bool step_warning = false;  // gamma * max_t ||x_t||^2 >= 2
  std::uint64_t seed = 0;
  // ridge-loo extras
  Vector lambda_grid;
  Vector loo_errors;               // NaN where skipped
  std::vector<int> skipped_grid;   // indices with a leverage at 1
};

// theta_t = (I - gamma x_t x_t^T) theta_{t-1} + gamma y_t x_t, one pass in
// row order; returns the average of theta_0..theta_n (n + 1 terms).
FitResult fit_averaged_sgd(const Matrix& X, const Vector& y, const SgdConfig& cfg = {});

// Solves ((1/n) X^T X + lambda I) theta = (1/n) X^T y; lambda == 0 gives the
// minimum-norm least-squares solution.
FitResult fit_ridge(const Matrix& X, const Vector& y, double lambda);

// Exact leave-one-out selection over a positive grid via the hat-matrix
// shortcut e_i / (1 - h_ii), one SVD reused across the grid. Ties toward the
// larger lambda; grid points with a leverage numerically at 1 are skipped.
FitResult fit_ridge_loo(const Matrix& X, const Vector& y, const Vector& lambda_grid);

// 30 log-spaced points spanning [1e-3 d/n, 1e3 d/n].
Vector default_lambda_grid(Index d, Index n, int points = 30);

Vector predict(const FitResult& fit, const Matrix& Ximp);

// Per-pattern minimum-norm least squares on the observed coordinates;
// unseen patterns at prediction time fall back to the zero predictor.
class PatternRegression {
 public:
  static PatternRegression fit(const Matrix& X, const Matrix& P, const Vector& y);

  double predict_row(const Eigen::Ref<const Vector>& x_row,
                     const Eigen::Ref<const Vector>& p_row) const;
  Vector predict(const Matrix& X, const Matrix& P) const;

  Index pattern_count() const { return static_cast<Index>(coef_.size()); }
  // Coefficients embedded into d coordinates (zeros off-pattern); null when
  // the pattern was not seen.
  const Vector* coefficients(const std::string& key) const;
  static std::string pattern_key(const Eigen::Ref<const Vector>& p_row);

 private:
  std::map<std::string, Vector> coef_;
  Index d_ = 0;
};

}  // namespace zimp
