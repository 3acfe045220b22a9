#pragma once

#include <cstdint>
#include <memory>

#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/parallel.hpp"

namespace zimp {

// Sampled rows with their mask and the zero-imputed view Ximp = P .* X.
// Immutable after creation; safe to share across threads.
struct Dataset {
  Matrix X;     // n x d, complete inputs
  Vector y;     // n
  Matrix P;     // n x d, entries in {0, 1}
  Matrix Ximp;  // n x d
  std::uint64_t seed = 0;
  std::shared_ptr<const LinearProblem> problem;
  std::shared_ptr<const MaskModel> mask;

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

// Draws n i.i.d. rows. Rows are generated in fixed chunks with one derived
// RNG stream per chunk, so the result is identical for serial and parallel
// execution and for any worker count.
Dataset sample_dataset(const LinearProblem& problem, const MaskModel& mask, Index n,
                       std::uint64_t seed, ExecMode mode = ExecMode::parallel);

struct McEstimate {
  double value = 0;
  double se = 0;
  std::int64_t n = 0;
};

// Monte Carlo estimate of R_imp(theta) = E[(Y - theta^T (P .* X))^2], with
// the standard error of the mean. Same determinism contract as
// sample_dataset.
McEstimate mc_imputed_risk(const LinearProblem& problem, const MaskModel& mask,
                           const Vector& theta, std::int64_t n_draws,
                           std::uint64_t seed, ExecMode mode = ExecMode::parallel);

}  // namespace zimp
