#pragma once

#include <cstdint>
#include <vector>

#include "zimp/common.hpp"
#include "zimp/model.hpp"
#include "zimp/parallel.hpp"
#include "zimp/rng.hpp"

namespace zimp {

// Missing-pattern distribution over {0,1}^d; entry 1 means observed.
class MaskModel {
 public:
  enum class Kind { ho_mcar, block_mcar, without_replacement, self_masking };

  // Components i.i.d. Bernoulli(rho). rho in (0, 1]: components that are
  // always missing are rejected so that diag(rho) stays invertible.
  static MaskModel ho_mcar(Index d, double rho);

  // Blocks of `block_size` consecutive components drawn independently, each
  // block from `block_law`, a pmf over {0,1}^block_size indexed so that bit
  // b of the index is the pattern value at block offset b. A trailing block
  // shorter than block_size uses the marginal of the law on its leading bits.
  static MaskModel block_mcar(Index d, Index block_size, std::vector<double> block_law);

  // Default within-block law: all components of a block equal, observed
  // together with probability rho.
  static MaskModel block_mcar_equal(Index d, Index block_size, double rho);

  // Exactly n_missing components missing, chosen uniformly without
  // replacement; every pattern has d - n_missing ones.
  static MaskModel without_replacement(Index d, Index n_missing);

  // P(P_j = 1 | X) = sigmoid(alpha_j X_j + intercept_j); MNAR.
  static MaskModel self_masking(Vector alpha, Vector intercept, double target_rate);

  Kind kind() const { return kind_; }
  Index dim() const { return d_; }
  bool is_mcar() const { return kind_ != Kind::self_masking; }
  bool needs_covariates() const { return kind_ == Kind::self_masking; }

  // Draws one pattern. x_row may be null for MCAR kinds and is required for
  // self-masking.
  void sample_into(Rng& rng, const double* x_row, double* pattern_out) const;
  Vector sample(Rng& rng) const;
  Vector sample(Rng& rng, const Vector& x_row) const;

  // Exact pmf of a pattern (MCAR kinds only).
  double pattern_prob(const std::vector<int>& pattern) const;

  // Parameter access.
  double rho() const;                  // ho_mcar
  Index n_missing() const;             // without_replacement
  Index block_size() const;            // block_mcar
  const std::vector<double>& block_law() const;  // block_mcar
  const Vector& alpha() const;         // self_masking
  const Vector& intercept() const;     // self_masking
  double target_rate() const;          // self_masking

  // Marginal observation probabilities (exact for MCAR kinds).
  Vector marginal_rho() const;

 private:
  MaskModel() = default;
  Kind kind_ = Kind::ho_mcar;
  Index d_ = 0;
  double rho_ = 1.0;
  Index k_missing_ = 0;
  Index block_size_ = 0;
  std::vector<double> block_law_;
  Vector alpha_, intercept_;
  double target_rate_ = 0.5;
};

// Exact or Monte Carlo mask moments: rho_j = P(P_j = 1),
// V = Cov(P), C_kj = V_kj / (rho_k rho_j), and the ridge-equivalent penalty
// level Lambda_imp = L2 * lambda_max(C).
struct MaskStats {
  Vector rho;
  Matrix V;
  Matrix C;
  double lambda_max_C = 0;
  double L2 = 1;
  double Lambda_imp = 0;
  // Sampling-without-replacement closed form (k+1)/(d-k) scaled by L2, kept
  // alongside the eigenvalue route for comparison; NaN for other kinds.
  double wor_paper_level = std::numeric_limits<double>::quiet_NaN();
  // Monte Carlo provenance; n_draws == 0 means exact closed form.
  std::int64_t n_draws = 0;
  Vector rho_se;
  Matrix V_se;
};

// Closed-form statistics; throws for self-masking (Monte Carlo only).
MaskStats exact_mask_stats(const MaskModel& model, double L2);

// Empirical statistics from n_draws patterns. Self-masking draws covariate
// rows from `problem`. Deterministic for any worker count.
MaskStats mc_mask_stats(const MaskModel& model, const LinearProblem& problem,
                        std::int64_t n_draws, std::uint64_t seed, double L2 = 1.0,
                        ExecMode mode = ExecMode::parallel);

// Builds a self-masking model with alpha_j = alpha_scale / sd(X_j) and
// per-component intercepts calibrated by bisection so that E[P_j] equals
// target_rate. Gaussian marginals are integrated by quadrature; with
// use_quadrature = false the bisection runs on a fixed Monte Carlo sample of
// mc_draws values per component instead.
MaskModel calibrate_self_masking(const LinearProblem& problem, double alpha_scale,
                                 double target_rate, std::uint64_t seed,
                                 bool use_quadrature = true,
                                 std::int64_t mc_draws = 400000);

}  // namespace zimp
