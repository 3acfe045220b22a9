#include "zimp/impute.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zimp/linalg.hpp"

namespace zimp {

namespace {

void check_shapes(const Matrix& X, const Matrix& P) {
  if (X.rows() != P.rows() || X.cols() != P.cols())
    throw std::invalid_argument("impute: X and P shapes differ");
}

struct ColumnModel {
  Vector weights;  // length d, zero at the target column
  double intercept = 0;
};

// Ridge regression of column j on the other columns over the given rows,
// with intercept via centering.
ColumnModel fit_column_model(const Matrix& Xw, const Matrix& X,
                             const std::vector<Index>& rows, Index j, double ridge) {
  const Index d = Xw.cols();
  const Index m = static_cast<Index>(rows.size());
  Matrix z(m, d - 1);
  Vector t(m);
  for (Index i = 0; i < m; ++i) {
    t(i) = X(rows[static_cast<std::size_t>(i)], j);
    Index c = 0;
    for (Index k = 0; k < d; ++k)
      if (k != j) z(i, c++) = Xw(rows[static_cast<std::size_t>(i)], k);
  }
  const Eigen::RowVectorXd zbar = z.colwise().mean();
  const double tbar = t.mean();
  z.rowwise() -= zbar;
  t.array() -= tbar;
  Matrix gram = z.transpose() * z / static_cast<double>(m);
  gram.diagonal().array() += ridge;
  const Vector w = Eigen::LDLT<Matrix>(gram).solve(z.transpose() * t / static_cast<double>(m));
  ColumnModel model;
  model.weights = Vector::Zero(d);
  Index c = 0;
  for (Index k = 0; k < d; ++k)
    if (k != j) model.weights(k) = w(c++);
  model.intercept = tbar - zbar.dot(w);
  return model;
}

}  // namespace

Matrix impute_zero(const Matrix& X, const Matrix& P) {
  check_shapes(X, P);
  return X.cwiseProduct(P);
}

Imputer Imputer::zero() {
  Imputer imp;
  imp.kind_ = Kind::zero;
  imp.fitted_ = true;
  return imp;
}

Imputer Imputer::fit_optimal_constant(const Matrix& X, const Matrix& P, const Vector& y) {
  check_shapes(X, P);
  const Index n = X.rows();
  const Index d = X.cols();
  if (y.size() != n) throw std::invalid_argument("fit_optimal_constant: y length mismatch");
  Matrix aug(n, 2 * d);
  aug.leftCols(d) = X.cwiseProduct(P);
  aug.rightCols(d) = P;
  Imputer imp;
  imp.kind_ = Kind::optimal_constant;
  imp.fitted_ = true;
  imp.aug_theta_ = minnorm_solve(aug, y);
  imp.constants_ = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    const double w = imp.aug_theta_(j);
    if (std::abs(w) > 1e-12) imp.constants_(j) = imp.aug_theta_(d + j) / w;
  }
  return imp;
}

Imputer Imputer::fit_iterative_conditional(const Matrix& X, const Matrix& P,
                                           int rounds, double ridge) {
  check_shapes(X, P);
  if (rounds < 1) throw std::invalid_argument("fit_iterative_conditional: need rounds >= 1");
  if (ridge < 0) throw std::invalid_argument("fit_iterative_conditional: ridge must be >= 0");
  const Index n = X.rows();
  const Index d = X.cols();
  if (d < 2)
    throw std::invalid_argument("fit_iterative_conditional: need at least two columns");

  std::vector<std::vector<Index>> obs_rows(static_cast<std::size_t>(d));
  std::vector<std::vector<Index>> mis_rows(static_cast<std::size_t>(d));
  Vector means = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    double acc = 0;
    for (Index i = 0; i < n; ++i) {
      if (P(i, j) != 0.0) {
        obs_rows[static_cast<std::size_t>(j)].push_back(i);
        acc += X(i, j);
      } else {
        mis_rows[static_cast<std::size_t>(j)].push_back(i);
      }
    }
    const auto n_obs = obs_rows[static_cast<std::size_t>(j)].size();
    if (n_obs == 0)
      throw std::invalid_argument("fit_iterative_conditional: column " + std::to_string(j) +
                                  " has no observed entries");
    means(j) = acc / static_cast<double>(n_obs);
  }

  // Working copy: observed entries from X, missing entries start at the mean.
  Matrix xw(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) xw(i, j) = P(i, j) != 0.0 ? X(i, j) : means(j);

  Imputer imp;
  imp.kind_ = Kind::iterative_conditional;
  imp.col_weights_ = Matrix::Zero(d, d);
  imp.col_intercepts_ = Vector::Zero(d);
  for (int round = 0; round < rounds; ++round) {
    for (Index j = 0; j < d; ++j) {
      ColumnModel model = fit_column_model(xw, X, obs_rows[static_cast<std::size_t>(j)], j, ridge);
      imp.col_weights_.row(j) = model.weights.transpose();
      imp.col_intercepts_(j) = model.intercept;
      for (Index i : mis_rows[static_cast<std::size_t>(j)])
        xw(i, j) = xw.row(i).dot(model.weights) + model.intercept;
    }
  }
  imp.col_means_ = std::move(means);
  imp.rounds_ = rounds;
  imp.ridge_ = ridge;
  imp.fitted_ = true;
  return imp;
}

Matrix Imputer::transform(const Matrix& X, const Matrix& P) const {
  check_shapes(X, P);
  if (!fitted_) throw std::logic_error("Imputer: transform before fit");
  const Index n = X.rows();
  const Index d = X.cols();
  switch (kind_) {
    case Kind::zero:
      return X.cwiseProduct(P);
    case Kind::optimal_constant: {
      if (constants_.size() != d) throw std::invalid_argument("Imputer: dimension mismatch");
      Matrix out(n, d);
      for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < n; ++i) out(i, j) = P(i, j) != 0.0 ? X(i, j) : constants_(j);
      return out;
    }
    case Kind::iterative_conditional: {
      if (col_means_.size() != d) throw std::invalid_argument("Imputer: dimension mismatch");
      Matrix out(n, d);
      for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < n; ++i) out(i, j) = P(i, j) != 0.0 ? X(i, j) : col_means_(j);
      // Replay the fitted column models on the missing entries.
      for (int round = 0; round < rounds_; ++round)
        for (Index j = 0; j < d; ++j)
          for (Index i = 0; i < n; ++i)
            if (P(i, j) == 0.0)
              out(i, j) = col_weights_.row(j).dot(out.row(i)) + col_intercepts_(j);
      return out;
    }
  }
  throw std::logic_error("Imputer: unknown kind");
}

const Vector& Imputer::constants() const {
  if (kind_ != Kind::optimal_constant)
    throw std::logic_error("Imputer: constants() is for optimal_constant");
  return constants_;
}

const Vector& Imputer::augmented_theta() const {
  if (kind_ != Kind::optimal_constant)
    throw std::logic_error("Imputer: augmented_theta() is for optimal_constant");
  return aug_theta_;
}

Vector Imputer::predict_augmented(const Matrix& Ximp, const Matrix& P) const {
  if (kind_ != Kind::optimal_constant)
    throw std::logic_error("Imputer: predict_augmented() is for optimal_constant");
  check_shapes(Ximp, P);
  const Index d = Ximp.cols();
  if (aug_theta_.size() != 2 * d) throw std::invalid_argument("Imputer: dimension mismatch");
  return Ximp * aug_theta_.head(d) + P * aug_theta_.tail(d);
}

}  // namespace zimp
