#include "zimp/theory.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zimp/linalg.hpp"
#include "zimp/rng.hpp"

namespace zimp {

namespace {

void check_dims(const LinearProblem& problem, const MaskStats& stats) {
  if (stats.rho.size() != problem.dim())
    throw std::invalid_argument("theory: mask stats dimension mismatch");
}

}  // namespace

Matrix imputed_second_moment(const LinearProblem& problem, const MaskStats& stats) {
  check_dims(problem, stats);
  const Matrix sigma = problem.cov.matrix();
  const Matrix sigma_p = stats.V + stats.rho * stats.rho.transpose();
  return sigma_p.cwiseProduct(sigma);
}

double imputed_risk(const LinearProblem& problem, const MaskStats& stats,
                    const Vector& theta) {
  check_dims(problem, stats);
  if (theta.size() != problem.dim())
    throw std::invalid_argument("imputed_risk: dimension mismatch");
  const Matrix sigma = problem.cov.matrix();
  const Vector cross = stats.rho.asDiagonal() * (sigma * problem.theta_star);
  const Matrix sigma_imp = (stats.V + stats.rho * stats.rho.transpose()).cwiseProduct(sigma);
  return problem.second_moment_y() - 2.0 * theta.dot(cross) + theta.dot(sigma_imp * theta);
}

double imputed_risk_via_penalty(const LinearProblem& problem, const MaskStats& stats,
                                const Vector& theta) {
  check_dims(problem, stats);
  const Matrix sigma = problem.cov.matrix();
  const Vector shrunk = stats.rho.asDiagonal() * theta;
  const double penalty = theta.dot(stats.V.cwiseProduct(sigma) * theta);
  return population_risk(problem, shrunk) + penalty;
}

OptimalImputed optimal_imputed_predictor(const LinearProblem& problem,
                                         const MaskStats& stats) {
  check_dims(problem, stats);
  const Matrix sigma = problem.cov.matrix();
  const Matrix sigma_imp = (stats.V + stats.rho * stats.rho.transpose()).cwiseProduct(sigma);
  const Vector cross = stats.rho.asDiagonal() * (sigma * problem.theta_star);
  PsdSolve solve = psd_solve(sigma_imp, cross);
  if (!solve.invertible)
    throw std::runtime_error("optimal_imputed_predictor: singular imputed second moment, lambda_min = " +
                             std::to_string(solve.lambda_min));
  OptimalImputed out;
  out.theta = std::move(solve.x);
  out.lambda_min = solve.lambda_min;
  out.risk = imputed_risk(problem, stats, out.theta);
  return out;
}

double imputation_bias(const LinearProblem& problem, const MaskStats& stats) {
  const double b = optimal_imputed_predictor(problem, stats).risk - problem.sigma2;
  return (b < 0 && b >= -1e-12) ? 0.0 : b;
}

double ridge_bias(const LinearProblem& problem, double lambda) {
  if (lambda < 0) throw std::invalid_argument("ridge_bias: lambda must be >= 0");
  if (lambda == 0) return 0.0;
  const Vector& ev = problem.cov.eigenvalues();
  const Vector align = problem.cov.eigenvectors().transpose() * problem.theta_star;
  double b = 0;
  for (Index j = 0; j < ev.size(); ++j)
    if (ev(j) > 0) b += lambda * ev(j) / (ev(j) + lambda) * align(j) * align(j);
  return b;
}

TheoryReport bound_bundle(const LinearProblem& problem, const MaskModel& mask,
                          const MaskStats& stats) {
  if (!mask.is_mcar())
    throw std::invalid_argument("bound_bundle: requires an MCAR mask");
  check_dims(problem, stats);
  TheoryReport rep;
  rep.d = problem.dim();
  const Vector diag = problem.cov.matrix().diagonal();
  rep.l2 = diag.minCoeff();
  rep.L2 = diag.maxCoeff();

  OptimalImputed opt = optimal_imputed_predictor(problem, stats);
  rep.sigma_imp_lambda_min = opt.lambda_min;
  rep.theta_imp = opt.theta;
  rep.theta_imp_sq_norm = opt.theta.squaredNorm();
  const double b = opt.risk - problem.sigma2;
  rep.b_imp = (b < 0 && b >= -1e-12) ? 0.0 : b;
  rep.eps_tol = 1e-9 * (1.0 + std::abs(rep.b_imp));
  rep.sigma_imp = imputed_second_moment(problem, stats);

  rep.Lambda_imp = rep.L2 * stats.lambda_max_C;
  rep.b_ridge_Lambda_imp = ridge_bias(problem, rep.Lambda_imp);
  rep.general_upper_ok = rep.b_imp <= rep.b_ridge_Lambda_imp + rep.eps_tol;

  if (mask.kind() == MaskModel::Kind::ho_mcar) {
    rep.sandwich_applicable = true;
    const double rho = mask.rho();
    const double odds = (1.0 - rho) / rho;
    rep.lambda_imp = rep.L2 * odds;
    rep.lambda_imp_prime = rep.l2 * odds;
    rep.b_ridge_lambda_imp = ridge_bias(problem, rep.lambda_imp);
    rep.b_ridge_lambda_imp_prime = ridge_bias(problem, rep.lambda_imp_prime);
    rep.sandwich_ok = rep.b_ridge_lambda_imp_prime - rep.eps_tol <= rep.b_imp &&
                      rep.b_imp <= rep.b_ridge_lambda_imp + rep.eps_tol;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> veig(stats.V, Eigen::EigenvaluesOnly);
  rep.v_lambda_min = veig.eigenvalues().minCoeff();
  if (rep.v_lambda_min > 1e-12) {
    rep.norm_applicable = true;
    rep.norm_bound = rep.b_imp / (rep.l2 * rep.v_lambda_min);
    rep.norm_ok = rep.theta_imp_sq_norm <= rep.norm_bound + rep.eps_tol;
  }
  return rep;
}

double example_bound(const LinearProblem& problem, const MaskStats& stats,
                     StructuredBound which) {
  check_dims(problem, stats);
  const Vector diag = problem.cov.matrix().diagonal();
  const double level = diag.maxCoeff() * stats.lambda_max_C;
  const double tr = problem.cov.trace();
  const double signal = problem.signal();
  const Vector& ev = problem.cov.eigenvalues();

  switch (which) {
    case StructuredBound::low_rank_equal: {
      const Index r = problem.cov.rank(1e-12);
      if (r < 1 || ev(0) - ev(r - 1) > 1e-9 * ev(0))
        throw std::invalid_argument("example_bound: nonzero eigenvalues are not equal");
      return level * static_cast<double>(r) / tr * signal;
    }
    case StructuredBound::compatible_decay: {
      const Index r = problem.cov.rank(1e-12);
      const Vector align = problem.cov.eigenvectors().transpose() * problem.theta_star;
      double harmonic = 0;
      for (Index k = 0; k < r; ++k) {
        if (k > 0 && align(k) * align(k) > align(k - 1) * align(k - 1) + 1e-12 * align.squaredNorm())
          throw std::invalid_argument("example_bound: alignment sequence is not non-increasing");
        harmonic += 1.0 / static_cast<double>(k + 1);
      }
      return level * static_cast<double>(r) / tr * harmonic * signal;
    }
    case StructuredBound::spiked: {
      if (problem.cov.kind() != CovarianceSpec::Kind::spiked)
        throw std::invalid_argument("example_bound: problem is not spiked");
      const double eta = problem.cov.spiked_eta();
      const Index r = problem.cov.spiked_top_rank();
      const Index tail = problem.cov.spiked_tail_dim();
      const double d = static_cast<double>(problem.dim());
      if (r < 1) throw std::invalid_argument("example_bound: spiked top block is empty");
      // Top-block eigenvalues must be equal and dominate the residual level.
      const Vector top = ev.head(r);
      if (top(0) - top(r - 1) > 1e-9 * top(0) || top(r - 1) <= eta)
        throw std::invalid_argument("example_bound: spiked top block must have equal eigenvalues above eta");
      if (tr - d * eta <= 0)
        throw std::invalid_argument("example_bound: residual level too large, tr(Sigma) <= d * eta");
      const double tail_norm_sq = problem.theta_star.tail(tail).squaredNorm();
      return level * static_cast<double>(r) / (tr - d * eta) * signal + eta * tail_norm_sq;
    }
  }
  throw std::logic_error("example_bound: unknown structure");
}

namespace {

// theta_m^T (K_mm - K_mo K_oo^+ K_om) theta_m for one pattern.
double pattern_residual_variance(const Matrix& K, const Vector& theta,
                                 const std::vector<int>& pattern) {
  std::vector<Index> obs, mis;
  for (Index j = 0; j < static_cast<Index>(pattern.size()); ++j)
    (pattern[static_cast<std::size_t>(j)] ? obs : mis).push_back(j);
  if (mis.empty()) return 0.0;
  Vector tm(static_cast<Index>(mis.size()));
  for (std::size_t a = 0; a < mis.size(); ++a) tm(static_cast<Index>(a)) = theta(mis[a]);
  Matrix kmm(mis.size(), mis.size());
  for (std::size_t a = 0; a < mis.size(); ++a)
    for (std::size_t b = 0; b < mis.size(); ++b) kmm(a, b) = K(mis[a], mis[b]);
  if (obs.empty()) return tm.dot(kmm * tm);
  Matrix kmo(mis.size(), obs.size());
  for (std::size_t a = 0; a < mis.size(); ++a)
    for (std::size_t b = 0; b < obs.size(); ++b) kmo(a, b) = K(mis[a], obs[b]);
  Matrix koo(obs.size(), obs.size());
  for (std::size_t a = 0; a < obs.size(); ++a)
    for (std::size_t b = 0; b < obs.size(); ++b) koo(a, b) = K(obs[a], obs[b]);
  const Matrix cond = kmm - kmo * pseudo_inverse(koo) * kmo.transpose();
  return tm.dot(cond * tm);
}

}  // namespace

MisBayesRisk gaussian_mis_bayes_risk(const LinearProblem& problem, const MaskModel& mask,
                                     std::int64_t pattern_budget, std::uint64_t seed) {
  if (!mask.is_mcar())
    throw std::invalid_argument("gaussian_mis_bayes_risk: requires an MCAR mask");
  if (mask.dim() != problem.dim())
    throw std::invalid_argument("gaussian_mis_bayes_risk: dimension mismatch");
  const Index d = problem.dim();
  // Centered covariance: the conditional law of a Gaussian depends on
  // Cov(X), not E[X X^T].
  const Matrix K = problem.sampling_factor * problem.sampling_factor.transpose();

  MisBayesRisk out;
  if (d < 63 && (std::int64_t{1} << d) <= pattern_budget) {
    out.exact = true;
    double acc = 0;
    std::vector<int> pattern(static_cast<std::size_t>(d));
    for (std::int64_t code = 0; code < (std::int64_t{1} << d); ++code) {
      for (Index j = 0; j < d; ++j) pattern[static_cast<std::size_t>(j)] = code >> j & 1;
      const double w = mask.pattern_prob(pattern);
      if (w <= 0) continue;
      ++out.patterns;
      acc += w * pattern_residual_variance(K, problem.theta_star, pattern);
    }
    out.value = problem.sigma2 + acc;
    return out;
  }

  const std::int64_t draws = std::max<std::int64_t>(pattern_budget, 1000);
  Rng rng = make_rng(seed, {fnv1a64("mis-bayes-patterns")});
  std::map<std::string, double> memo;
  Vector p(d);
  std::vector<int> pattern(static_cast<std::size_t>(d));
  std::string key(static_cast<std::size_t>(d), '0');
  double acc = 0, acc_sq = 0;
  for (std::int64_t t = 0; t < draws; ++t) {
    mask.sample_into(rng, nullptr, p.data());
    for (Index j = 0; j < d; ++j) {
      pattern[static_cast<std::size_t>(j)] = p(j) == 1.0;
      key[static_cast<std::size_t>(j)] = p(j) == 1.0 ? '1' : '0';
    }
    auto it = memo.find(key);
    if (it == memo.end())
      it = memo.emplace(key, pattern_residual_variance(K, problem.theta_star, pattern)).first;
    acc += it->second;
    acc_sq += it->second * it->second;
  }
  const double n = static_cast<double>(draws);
  const double mean = acc / n;
  out.value = problem.sigma2 + mean;
  out.se = std::sqrt(std::max(0.0, acc_sq / n - mean * mean) / n);
  out.patterns = static_cast<std::int64_t>(memo.size());
  return out;
}

}  // namespace zimp
