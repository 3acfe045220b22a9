#pragma once

#include <cstdint>
#include <limits>

#include "zimp/masking.hpp"
#include "zimp/model.hpp"

namespace zimp {

// E[Ximp Ximp^T] = Sigma_P .* Sigma with Sigma_P = V + rho rho^T.
Matrix imputed_second_moment(const LinearProblem& problem, const MaskStats& stats);

// Closed-form R_imp(theta) = E[Y^2] - 2 theta^T diag(rho) Sigma theta_star
//                            + theta^T (Sigma_P .* Sigma) theta   (MCAR).
double imputed_risk(const LinearProblem& problem, const MaskStats& stats,
                    const Vector& theta);

// Algebraically equal route R(diag(rho) theta) + ||theta||^2_{V .* Sigma},
// kept separate so the identity can be checked numerically.
double imputed_risk_via_penalty(const LinearProblem& problem, const MaskStats& stats,
                                const Vector& theta);

struct OptimalImputed {
  Vector theta;           // argmin of R_imp over linear predictors
  double risk = 0;        // R_imp at the optimum
  double lambda_min = 0;  // smallest eigenvalue of Sigma_imp
};

// theta_imp_star = (Sigma_P .* Sigma)^{-1} diag(rho) Sigma theta_star.
// Throws when Sigma_imp is singular (reports lambda_min).
OptimalImputed optimal_imputed_predictor(const LinearProblem& problem,
                                         const MaskStats& stats);

// B_imp = R_imp_star - sigma2; tiny negative rounding in [-1e-12, 0] is
// clamped to zero.
double imputation_bias(const LinearProblem& problem, const MaskStats& stats);

// B_ridge_lambda = sum_j lambda lambda_j / (lambda_j + lambda) <v_j, theta*>^2.
double ridge_bias(const LinearProblem& problem, double lambda);

struct TheoryReport {
  Index d = 0;
  double l2 = 0;  // min_j Sigma_jj
  double L2 = 0;  // max_j Sigma_jj
  double b_imp = 0;
  double theta_imp_sq_norm = 0;
  double eps_tol = 0;
  double sigma_imp_lambda_min = 0;

  // Homogeneous-MCAR sandwich levels; NaN when the mask is not ho-MCAR.
  double lambda_imp = std::numeric_limits<double>::quiet_NaN();
  double lambda_imp_prime = std::numeric_limits<double>::quiet_NaN();
  double b_ridge_lambda_imp = std::numeric_limits<double>::quiet_NaN();
  double b_ridge_lambda_imp_prime = std::numeric_limits<double>::quiet_NaN();
  bool sandwich_applicable = false;
  bool sandwich_ok = true;

  // General-MCAR ridge level L2 * lambda_max(C) and its bound.
  double Lambda_imp = 0;
  double b_ridge_Lambda_imp = 0;
  bool general_upper_ok = true;

  // ||theta_imp_star||^2 <= b_imp / (l2 lambda_min(V)); unavailable when V
  // is singular.
  double v_lambda_min = 0;
  double norm_bound = std::numeric_limits<double>::quiet_NaN();
  bool norm_applicable = false;
  bool norm_ok = true;

  Vector theta_imp;
  Matrix sigma_imp;

  bool all_ok() const {
    return (!sandwich_applicable || sandwich_ok) && general_upper_ok &&
           (!norm_applicable || norm_ok);
  }
};

// Evaluates the full bias/bound bundle for an MCAR mask.
TheoryReport bound_bundle(const LinearProblem& problem, const MaskModel& mask,
                          const MaskStats& stats);

enum class StructuredBound { low_rank_equal, compatible_decay, spiked };

// Closed-form structured upper bounds on B_imp, at the general-MCAR ridge
// level L2 * lambda_max(C):
//   low_rank_equal:    level * (r / tr(Sigma)) * ||theta*||_Sigma^2
//   compatible_decay:  level * (r / tr(Sigma)) * (sum_{k<=r} 1/k) * ||theta*||_Sigma^2,
//                      requires <v_j, theta*>^2 non-increasing over the rank
//   spiked:            level * r / (tr(Sigma) - d eta) * ||theta*||_Sigma^2
//                      + eta * ||theta*_tail||^2
// Throws when the problem structure does not match `which`.
double example_bound(const LinearProblem& problem, const MaskStats& stats,
                     StructuredBound which);

struct MisBayesRisk {
  double value = 0;
  double se = 0;       // 0 when exact
  bool exact = false;  // exact pattern enumeration vs Monte Carlo
  std::int64_t patterns = 0;
};

// Bayes risk with missing inputs for Gaussian data and an MCAR mask:
//   R_mis_star = sigma2 + E_P[ theta_m^T (K_mm - K_mo K_oo^+ K_om) theta_m ]
// with K the centered covariance and (o, m) the observed/missing split of
// the pattern. Enumerates all 2^d patterns when that fits pattern_budget,
// otherwise averages over pattern_budget Monte Carlo pattern draws.
MisBayesRisk gaussian_mis_bayes_risk(const LinearProblem& problem, const MaskModel& mask,
                                     std::int64_t pattern_budget, std::uint64_t seed);

}  // namespace zimp
