#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>

#include "zimp/common.hpp"

namespace zimp {

// Positive semi-definite second-moment matrix with exact spectral access
// derived from its generative form (no numerical factorization when the
// structure already implies the spectrum).
class CovarianceSpec {
 public:
  enum class Kind { identity, low_rank_equal, low_rank_factor, spiked, explicit_psd };

  // Empty placeholder (dim 0); assign from a factory before use.
  CovarianceSpec() = default;

  static CovarianceSpec identity(Index d);
  // Exactly r nonzero eigenvalues, all equal to total_trace / r, with a
  // seeded random orthonormal eigenbasis.
  static CovarianceSpec low_rank_equal(Index d, Index r, double total_trace,
                                       std::uint64_t seed);
  // Sigma = F F^T for an explicit d x k factor.
  static CovarianceSpec low_rank_factor(Matrix factor);
  // Block structure [top 0; 0 eta*I_tail]; the residual block satisfies
  // lambda_max = eta exactly.
  static CovarianceSpec spiked(const CovarianceSpec& top, double eta, Index tail_dim);
  static CovarianceSpec explicit_psd(Matrix sigma);

  Kind kind() const { return kind_; }
  Index dim() const { return d_; }
  double trace() const { return eigenvalues_.sum(); }
  Index rank(double rel_tol = 1e-12) const;

  Matrix matrix() const;
  // Eigenvalues in descending order with matching eigenvector columns.
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }

  // Rescaled copy with trace == target (exact to rounding).
  CovarianceSpec normalized_to_trace(double target) const;

  // d x k factor F with F F^T = matrix(); columns span the range.
  Matrix sampling_factor() const;

  // Spiked accessors.
  double spiked_eta() const;
  Index spiked_tail_dim() const;
  Index spiked_top_rank() const;

 private:
  Kind kind_ = Kind::identity;
  Index d_ = 0;
  Vector eigenvalues_;   // descending
  Matrix eigenvectors_;  // d x d
  Matrix factor_;        // low_rank_factor only: the generative factor
  double eta_ = 0;       // spiked only
  Index tail_dim_ = 0;   // spiked only
  Index top_rank_ = 0;   // spiked only
};

// Population regression problem Y = X^T theta_star + eps with Gaussian X and
// eps ~ N(0, sigma2). `cov` is the second moment E[X X^T]; X is sampled as
// mu + F z with F F^T = cov - mu mu^T.
struct LinearProblem {
  CovarianceSpec cov;
  Vector theta_star;
  double sigma2 = 0;
  Vector mu;
  Matrix sampling_factor;  // d x k

  Index dim() const { return cov.dim(); }
  // ||theta||_Sigma^2
  double sigma_norm_sq(const Vector& theta) const;
  // ||theta_star||_Sigma^2, the excess risk of the constant-zero predictor
  double signal() const { return sigma_norm_sq(theta_star); }
  // E[Y^2] = signal + sigma2
  double second_moment_y() const { return signal() + sigma2; }
  // Marginal variance of X_j (centered).
  double marginal_variance(Index j) const;
};

// Problem with mu = 0 from an arbitrary spec.
LinearProblem make_problem(CovarianceSpec cov, Vector theta_star, double sigma2);

// Section-5 low-rank generative model: X = A z + mu with A a d x r Gaussian
// factor (optionally rescaled so trace(A A^T) = d), theta_star = (A^+)^T beta.
// Retries a rank-deficient draw of A up to 3 times.
LinearProblem build_lowrank_problem(Index d, Index r, const Vector& beta,
                                    const Vector& mu, double sigma2,
                                    std::uint64_t seed, bool normalize_trace = true);

// Same model with an explicit factor (used for hand-constructed instances).
LinearProblem lowrank_problem_from_factor(const Matrix& factor, const Vector& beta,
                                          const Vector& mu, double sigma2);

// Spiked model: first d/2 coordinates follow the low-rank model with rank r,
// the last d/2 are isotropic with level eta and coefficient vector of norm
// theta_tail_norm. d must be even.
LinearProblem build_spiked_problem(Index d, Index r, double theta_tail_norm,
                                   double eta, double sigma2, std::uint64_t seed,
                                   bool normalize_trace = true);

// R(theta) = ||theta - theta_star||_Sigma^2 + sigma2, exactly.
double population_risk(const LinearProblem& problem, const Vector& theta);

}  // namespace zimp
