#include "zimp/regress.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "zimp/linalg.hpp"

namespace zimp {

FitResult fit_averaged_sgd(const Matrix& X, const Vector& y, const SgdConfig& cfg) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (y.size() != n) throw std::invalid_argument("fit_averaged_sgd: shape mismatch");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("fit_averaged_sgd: non-finite input");

  double gamma = cfg.gamma;
  if (cfg.rule == SgdConfig::StepRule::dim_rule) {
    const double l2hat = n > 0 ? X.colwise().squaredNorm().maxCoeff() / static_cast<double>(n) : 1.0;
    gamma = 1.0 / (cfg.kappa * static_cast<double>(d) * std::max(l2hat, 1e-300) *
                   std::sqrt(static_cast<double>(n)));
  }
  if (!(gamma > 0)) throw std::invalid_argument("fit_averaged_sgd: step size must be positive");

  Vector theta = cfg.theta0.size() ? cfg.theta0 : Vector::Zero(d);
  if (theta.size() != d) throw std::invalid_argument("fit_averaged_sgd: theta0 has wrong length");

  double max_row_sq = 0;
  Vector sum = theta;  // includes theta_0
  for (Index t = 0; t < n; ++t) {
    const auto x = X.row(t).transpose();
    max_row_sq = std::max(max_row_sq, x.squaredNorm());
    theta += gamma * (y(t) - x.dot(theta)) * x;
    sum += theta;
  }

  FitResult fit;
  fit.method = "sgd";
  fit.hyperparameter = gamma;
  fit.theta = sum / static_cast<double>(n + 1);
  fit.final_iterate_norm = theta.norm();
  fit.average_iterate_norm = fit.theta.norm();
  fit.step_warning = gamma * max_row_sq >= 2.0;
  return fit;
}

FitResult fit_ridge(const Matrix& X, const Vector& y, double lambda) {
  const Index n = X.rows();
  if (y.size() != n) throw std::invalid_argument("fit_ridge: shape mismatch");
  if (lambda < 0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  FitResult fit;
  fit.hyperparameter = lambda;
  if (lambda == 0) {
    fit.method = "ols";
    fit.theta = minnorm_solve(X, y);
    return fit;
  }
  fit.method = "ridge";
  const double dn = static_cast<double>(n);
  Matrix gram = X.transpose() * X / dn;
  gram.diagonal().array() += lambda;
  fit.theta = Eigen::LLT<Matrix>(gram).solve(X.transpose() * y / dn);
  return fit;
}

Vector default_lambda_grid(Index d, Index n, int points) {
  if (points < 1) throw std::invalid_argument("default_lambda_grid: need at least one point");
  const double center = static_cast<double>(d) / static_cast<double>(n);
  Vector grid(points);
  if (points == 1) {
    grid(0) = center;
    return grid;
  }
  const double lo = std::log10(1e-3 * center), hi = std::log10(1e3 * center);
  for (int i = 0; i < points; ++i)
    grid(i) = std::pow(10.0, lo + (hi - lo) * i / static_cast<double>(points - 1));
  return grid;
}

FitResult fit_ridge_loo(const Matrix& X, const Vector& y, const Vector& lambda_grid) {
  const Index n = X.rows();
  if (y.size() != n) throw std::invalid_argument("fit_ridge_loo: shape mismatch");
  if (lambda_grid.size() == 0) throw std::invalid_argument("fit_ridge_loo: empty grid");
  if (lambda_grid.minCoeff() <= 0)
    throw std::invalid_argument("fit_ridge_loo: grid must be strictly positive");

  // One spectral decomposition reused across the grid: with X = U S V^T the
  // ridge hat matrix is U diag(s^2 / (s^2 + n lambda)) U^T.
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s2 = svd.singularValues().array().square();
  const Matrix& u = svd.matrixU();
  const Vector uty = u.transpose() * y;
  const double dn = static_cast<double>(n);

  FitResult fit;
  fit.method = "ridge-loo";
  fit.lambda_grid = lambda_grid;
  fit.loo_errors = Vector::Constant(lambda_grid.size(), std::numeric_limits<double>::quiet_NaN());

  double best_err = std::numeric_limits<double>::infinity();
  Index best = -1;
  for (Index g = 0; g < lambda_grid.size(); ++g) {
    const double lambda = lambda_grid(g);
    const Vector shrink = (s2.array() / (s2.array() + dn * lambda)).matrix();
    const Vector yhat = u * shrink.cwiseProduct(uty);
    const Vector h = (u.array().square().matrix() * shrink);  // leverage diagonal
    if ((h.array() >= 1.0 - 1e-12).any()) {
      fit.skipped_grid.push_back(static_cast<int>(g));
      continue;
    }
    const double err = ((y - yhat).array() / (1.0 - h.array())).square().mean();
    fit.loo_errors(g) = err;
    if (err <= best_err) {  // grid ascends, so ties resolve to the larger lambda
      best_err = err;
      best = g;
    }
  }
  if (best < 0) throw std::runtime_error("fit_ridge_loo: every grid point had a leverage at 1");

  const double lambda = lambda_grid(best);
  const Vector shrink_theta =
      (svd.singularValues().array() / (s2.array() + dn * lambda)).matrix();
  fit.theta = svd.matrixV() * shrink_theta.cwiseProduct(uty);
  fit.hyperparameter = lambda;
  return fit;
}

Vector predict(const FitResult& fit, const Matrix& Ximp) {
  if (Ximp.cols() != fit.theta.size()) throw std::invalid_argument("predict: dimension mismatch");
  return Ximp * fit.theta;
}

std::string PatternRegression::pattern_key(const Eigen::Ref<const Vector>& p_row) {
  std::string key(static_cast<std::size_t>(p_row.size()), '0');
  for (Index j = 0; j < p_row.size(); ++j)
    if (p_row(j) != 0.0) key[static_cast<std::size_t>(j)] = '1';
  return key;
}

PatternRegression PatternRegression::fit(const Matrix& X, const Matrix& P, const Vector& y) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (P.rows() != n || P.cols() != d || y.size() != n)
    throw std::invalid_argument("PatternRegression: shape mismatch");
  PatternRegression pr;
  pr.d_ = d;

  std::map<std::string, std::vector<Index>> groups;
  for (Index i = 0; i < n; ++i) groups[pattern_key(P.row(i))].push_back(i);

  for (auto& [key, rows] : groups) {
    std::vector<Index> obs;
    for (Index j = 0; j < d; ++j)
      if (key[static_cast<std::size_t>(j)] == '1') obs.push_back(j);
    Vector theta = Vector::Zero(d);
    if (!obs.empty()) {
      Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(obs.size()));
      Vector b(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        b(static_cast<Index>(i)) = y(rows[i]);
        for (std::size_t j = 0; j < obs.size(); ++j)
          a(static_cast<Index>(i), static_cast<Index>(j)) = X(rows[i], obs[j]);
      }
      const Vector coef = minnorm_solve(a, b);
      for (std::size_t j = 0; j < obs.size(); ++j) theta(obs[j]) = coef(static_cast<Index>(j));
    }
    pr.coef_.emplace(key, std::move(theta));
  }
  return pr;
}

double PatternRegression::predict_row(const Eigen::Ref<const Vector>& x_row,
                                      const Eigen::Ref<const Vector>& p_row) const {
  const auto it = coef_.find(pattern_key(p_row));
  if (it == coef_.end()) return 0.0;
  // Off-pattern coefficients are zero, so masked entries cannot contribute.
  double out = 0;
  for (Index j = 0; j < d_; ++j)
    if (p_row(j) != 0.0) out += it->second(j) * x_row(j);
  return out;
}

Vector PatternRegression::predict(const Matrix& X, const Matrix& P) const {
  if (X.cols() != d_ || P.rows() != X.rows() || P.cols() != d_)
    throw std::invalid_argument("PatternRegression: shape mismatch");
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i), P.row(i));
  return out;
}

const Vector* PatternRegression::coefficients(const std::string& key) const {
  const auto it = coef_.find(key);
  return it == coef_.end() ? nullptr : &it->second;
}

}  // namespace zimp
