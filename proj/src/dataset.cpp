#include "zimp/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "zimp/rng.hpp"

namespace zimp {

namespace {
constexpr std::int64_t kRowChunk = 1024;
}

Dataset sample_dataset(const LinearProblem& problem, const MaskModel& mask, Index n,
                       std::uint64_t seed, ExecMode mode) {
  if (n < 1) throw std::invalid_argument("sample_dataset: need n >= 1");
  if (mask.dim() != problem.dim())
    throw std::invalid_argument("sample_dataset: mask dimension mismatch");
  const Index d = problem.dim();
  const Matrix& f = problem.sampling_factor;
  const Index kf = f.cols();
  const double noise_sd = std::sqrt(problem.sigma2);

  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  ds.P.resize(n, d);
  ds.seed = seed;

  const ChunkGrid grid{n, kRowChunk};
  run_chunks(grid, mode, [&](std::int64_t c, std::int64_t lo, std::int64_t hi) {
    Rng rng = make_rng(seed, {fnv1a64("dataset-rows"), static_cast<std::uint64_t>(c)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(kf), x(d), p(d);
    for (std::int64_t i = lo; i < hi; ++i) {
      for (Index t = 0; t < kf; ++t) z(t) = gauss(rng);
      x = problem.mu + f * z;
      const double eps = noise_sd > 0 ? noise_sd * gauss(rng) : 0.0;
      mask.sample_into(rng, x.data(), p.data());
      ds.X.row(i) = x;
      ds.y(i) = x.dot(problem.theta_star) + eps;
      ds.P.row(i) = p;
    }
  });

  ds.Ximp = ds.X.cwiseProduct(ds.P);
  ds.problem = std::make_shared<LinearProblem>(problem);
  ds.mask = std::make_shared<MaskModel>(mask);
  return ds;
}

McEstimate mc_imputed_risk(const LinearProblem& problem, const MaskModel& mask,
                           const Vector& theta, std::int64_t n_draws,
                           std::uint64_t seed, ExecMode mode) {
  if (n_draws < 2) throw std::invalid_argument("mc_imputed_risk: need n_draws >= 2");
  if (theta.size() != problem.dim())
    throw std::invalid_argument("mc_imputed_risk: dimension mismatch");
  const Index d = problem.dim();
  const Matrix& f = problem.sampling_factor;
  const Index kf = f.cols();
  const double noise_sd = std::sqrt(problem.sigma2);

  const ChunkGrid grid{n_draws, 8192};
  const std::int64_t nc = grid.chunks();
  std::vector<double> sum(static_cast<std::size_t>(nc), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(nc), 0.0);

  run_chunks(grid, mode, [&](std::int64_t c, std::int64_t lo, std::int64_t hi) {
    Rng rng = make_rng(seed, {fnv1a64("mc-imputed-risk"), static_cast<std::uint64_t>(c)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(kf), x(d), p(d);
    double acc = 0, acc_sq = 0;
    for (std::int64_t i = lo; i < hi; ++i) {
      for (Index t = 0; t < kf; ++t) z(t) = gauss(rng);
      x = problem.mu + f * z;
      const double y = x.dot(problem.theta_star) + (noise_sd > 0 ? noise_sd * gauss(rng) : 0.0);
      mask.sample_into(rng, x.data(), p.data());
      double pred = 0;
      for (Index j = 0; j < d; ++j) pred += theta(j) * p(j) * x(j);
      const double sq = (y - pred) * (y - pred);
      acc += sq;
      acc_sq += sq * sq;
    }
    sum[static_cast<std::size_t>(c)] = acc;
    sum_sq[static_cast<std::size_t>(c)] = acc_sq;
  });

  double tot = 0, tot_sq = 0;
  for (std::int64_t c = 0; c < nc; ++c) {
    tot += sum[static_cast<std::size_t>(c)];
    tot_sq += sum_sq[static_cast<std::size_t>(c)];
  }
  const double n = static_cast<double>(n_draws);
  McEstimate est;
  est.n = n_draws;
  est.value = tot / n;
  const double var = std::max(0.0, tot_sq / n - est.value * est.value);
  est.se = std::sqrt(var / n);
  return est;
}

}  // namespace zimp
