#include "zimp/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "zimp/linalg.hpp"
#include "zimp/rng.hpp"

namespace zimp {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

// Sorts eigenpairs into descending eigenvalue order.
void sort_descending(Vector& values, Matrix& vectors) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  Vector v(values.size());
  Matrix m(vectors.rows(), vectors.cols());
  for (Index k = 0; k < values.size(); ++k) {
    v(k) = values(idx[static_cast<std::size_t>(k)]);
    m.col(k) = vectors.col(idx[static_cast<std::size_t>(k)]);
  }
  values.swap(v);
  vectors.swap(m);
}

}  // namespace

CovarianceSpec CovarianceSpec::identity(Index d) {
  if (d < 1) throw std::invalid_argument("CovarianceSpec: dimension must be positive");
  CovarianceSpec s;
  s.kind_ = Kind::identity;
  s.d_ = d;
  s.eigenvalues_ = Vector::Ones(d);
  s.eigenvectors_ = Matrix::Identity(d, d);
  return s;
}

CovarianceSpec CovarianceSpec::low_rank_equal(Index d, Index r, double total_trace,
                                              std::uint64_t seed) {
  if (d < 1 || r < 1 || r > d)
    throw std::invalid_argument("CovarianceSpec: need 1 <= r <= d");
  if (total_trace <= 0) throw std::invalid_argument("CovarianceSpec: trace must be positive");
  Rng rng = make_rng(seed, {fnv1a64("low-rank-equal")});
  Matrix g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  CovarianceSpec s;
  s.kind_ = Kind::low_rank_equal;
  s.d_ = d;
  s.eigenvalues_ = Vector::Zero(d);
  s.eigenvalues_.head(r).setConstant(total_trace / static_cast<double>(r));
  s.eigenvectors_ = q;
  return s;
}

CovarianceSpec CovarianceSpec::low_rank_factor(Matrix factor) {
  if (factor.rows() < 1 || factor.cols() < 1)
    throw std::invalid_argument("CovarianceSpec: empty factor");
  const Index d = factor.rows();
  Eigen::BDCSVD<Matrix> svd(factor, Eigen::ComputeFullU);
  CovarianceSpec s;
  s.kind_ = Kind::low_rank_factor;
  s.d_ = d;
  s.eigenvalues_ = Vector::Zero(d);
  const Index k = std::min(d, factor.cols());
  s.eigenvalues_.head(k) = svd.singularValues().head(k).array().square();
  s.eigenvectors_ = svd.matrixU();
  s.factor_ = std::move(factor);
  return s;
}

CovarianceSpec CovarianceSpec::spiked(const CovarianceSpec& top, double eta,
                                      Index tail_dim) {
  if (eta < 0) throw std::invalid_argument("CovarianceSpec: eta must be >= 0");
  if (tail_dim < 1) throw std::invalid_argument("CovarianceSpec: tail_dim must be >= 1");
  const Index dt = top.dim();
  const Index d = dt + tail_dim;
  CovarianceSpec s;
  s.kind_ = Kind::spiked;
  s.d_ = d;
  s.eta_ = eta;
  s.tail_dim_ = tail_dim;
  s.top_rank_ = top.rank();
  Vector values(d);
  values.head(dt) = top.eigenvalues();
  values.tail(tail_dim).setConstant(eta);
  Matrix vectors = Matrix::Zero(d, d);
  vectors.topLeftCorner(dt, dt) = top.eigenvectors();
  vectors.bottomRightCorner(tail_dim, tail_dim).setIdentity();
  sort_descending(values, vectors);
  s.eigenvalues_ = std::move(values);
  s.eigenvectors_ = std::move(vectors);
  return s;
}

CovarianceSpec CovarianceSpec::explicit_psd(Matrix sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw std::invalid_argument("CovarianceSpec: matrix must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("CovarianceSpec: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  Vector values = eig.eigenvalues();
  if (values(0) < -1e-10 * scale)
    throw std::invalid_argument("CovarianceSpec: matrix is not PSD");
  values = values.cwiseMax(0.0);
  Matrix vectors = eig.eigenvectors();
  sort_descending(values, vectors);
  CovarianceSpec s;
  s.kind_ = Kind::explicit_psd;
  s.d_ = sigma.rows();
  s.eigenvalues_ = std::move(values);
  s.eigenvectors_ = std::move(vectors);
  return s;
}

Index CovarianceSpec::rank(double rel_tol) const {
  const double cut = rel_tol * std::max(eigenvalues_(0), 0.0);
  Index r = 0;
  for (Index i = 0; i < d_; ++i)
    if (eigenvalues_(i) > cut) ++r;
  return r;
}

Matrix CovarianceSpec::matrix() const {
  switch (kind_) {
    case Kind::identity:
      return Matrix::Identity(d_, d_);
    case Kind::low_rank_factor:
      if (factor_.size()) return factor_ * factor_.transpose();
      [[fallthrough]];
    default:
      return eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
  }
}

CovarianceSpec CovarianceSpec::normalized_to_trace(double target) const {
  if (target <= 0) throw std::invalid_argument("CovarianceSpec: target trace must be positive");
  const double t = trace();
  if (t <= 0) throw std::invalid_argument("CovarianceSpec: zero trace cannot be normalized");
  CovarianceSpec s = *this;
  const double c = target / t;
  s.eigenvalues_ *= c;
  if (s.factor_.size()) s.factor_ *= std::sqrt(c);
  s.eta_ *= c;
  return s;
}

Matrix CovarianceSpec::sampling_factor() const {
  const Index r = rank();
  Matrix f(d_, r);
  Index k = 0;
  for (Index i = 0; i < d_; ++i) {
    if (k < r && eigenvalues_(i) > 1e-12 * std::max(eigenvalues_(0), 0.0)) {
      f.col(k) = eigenvectors_.col(i) * std::sqrt(eigenvalues_(i));
      ++k;
    }
  }
  return f.leftCols(k);
}

double CovarianceSpec::spiked_eta() const {
  if (kind_ != Kind::spiked) throw std::logic_error("CovarianceSpec: not a spiked spec");
  return eta_;
}

Index CovarianceSpec::spiked_tail_dim() const {
  if (kind_ != Kind::spiked) throw std::logic_error("CovarianceSpec: not a spiked spec");
  return tail_dim_;
}

Index CovarianceSpec::spiked_top_rank() const {
  if (kind_ != Kind::spiked) throw std::logic_error("CovarianceSpec: not a spiked spec");
  return top_rank_;
}

double LinearProblem::sigma_norm_sq(const Vector& theta) const {
  if (theta.size() != dim()) throw std::invalid_argument("sigma_norm_sq: dimension mismatch");
  Vector proj = cov.eigenvectors().transpose() * theta;
  return (cov.eigenvalues().array() * proj.array().square()).sum();
}

double LinearProblem::marginal_variance(Index j) const {
  const Matrix& f = sampling_factor;
  return f.row(j).squaredNorm();
}

LinearProblem make_problem(CovarianceSpec cov, Vector theta_star, double sigma2) {
  if (theta_star.size() != cov.dim())
    throw std::invalid_argument("make_problem: dimension mismatch");
  if (sigma2 < 0) throw std::invalid_argument("make_problem: sigma2 must be >= 0");
  LinearProblem p;
  p.sampling_factor = cov.sampling_factor();
  p.cov = std::move(cov);
  p.theta_star = std::move(theta_star);
  p.sigma2 = sigma2;
  p.mu = Vector::Zero(p.cov.dim());
  return p;
}

LinearProblem lowrank_problem_from_factor(const Matrix& factor, const Vector& beta,
                                          const Vector& mu, double sigma2) {
  const Index d = factor.rows();
  const Index r = factor.cols();
  if (beta.size() != r) throw std::invalid_argument("lowrank problem: beta must have length r");
  if (mu.size() != d) throw std::invalid_argument("lowrank problem: mu must have length d");
  if (sigma2 < 0) throw std::invalid_argument("lowrank problem: sigma2 must be >= 0");
  LinearProblem p;
  p.theta_star = pseudo_inverse(factor).transpose() * beta;
  p.sigma2 = sigma2;
  p.mu = mu;
  p.sampling_factor = factor;
  if (mu.isZero(0.0)) {
    p.cov = CovarianceSpec::low_rank_factor(factor);
  } else {
    // E[X X^T] = A A^T + mu mu^T: still a factor model with the mean as an
    // extra deterministic column.
    Matrix aug(d, r + 1);
    aug.leftCols(r) = factor;
    aug.col(r) = mu;
    p.cov = CovarianceSpec::low_rank_factor(std::move(aug));
  }
  return p;
}

LinearProblem build_lowrank_problem(Index d, Index r, const Vector& beta,
                                    const Vector& mu, double sigma2,
                                    std::uint64_t seed, bool normalize_trace) {
  if (r < 1 || r > d) throw std::invalid_argument("build_lowrank_problem: need 1 <= r <= d");
  Rng rng = make_rng(seed, {fnv1a64("lowrank-factor")});
  Matrix a;
  bool full_rank = false;
  for (int attempt = 0; attempt < 3 && !full_rank; ++attempt) {
    a = gaussian_matrix(d, r, rng);
    Eigen::BDCSVD<Matrix> svd(a);
    full_rank = svd.singularValues()(r - 1) > 1e-10 * svd.singularValues()(0);
  }
  if (!full_rank)
    throw std::runtime_error("build_lowrank_problem: sampled factor is rank deficient");
  if (normalize_trace) a *= std::sqrt(static_cast<double>(d) / a.squaredNorm());
  return lowrank_problem_from_factor(a, beta, mu, sigma2);
}

LinearProblem build_spiked_problem(Index d, Index r, double theta_tail_norm,
                                   double eta, double sigma2, std::uint64_t seed,
                                   bool normalize_trace) {
  if (d % 2 != 0) throw std::invalid_argument("build_spiked_problem: d must be even");
  if (d < 2 || r < 1 || r > d / 2)
    throw std::invalid_argument("build_spiked_problem: need 1 <= r <= d/2");
  if (eta < 0 || theta_tail_norm < 0 || sigma2 < 0)
    throw std::invalid_argument("build_spiked_problem: negative parameter");
  const Index half = d / 2;
  LinearProblem top = build_lowrank_problem(half, r, Vector::Zero(r), Vector::Zero(half),
                                            0.0, seed, false);
  Matrix a = top.sampling_factor;
  if (normalize_trace) {
    // trace(Sigma) = d overall: the residual block contributes eta * d/2.
    const double target_top = static_cast<double>(d) - eta * static_cast<double>(half);
    if (target_top <= 0)
      throw std::invalid_argument("build_spiked_problem: eta too large for normalization");
    a *= std::sqrt(target_top / a.squaredNorm());
  }

  Rng rng = make_rng(seed, {fnv1a64("spiked-coefs")});
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector beta(r);
  for (Index i = 0; i < r; ++i) beta(i) = gauss(rng);
  Vector theta_tail(half);
  for (Index i = 0; i < half; ++i) theta_tail(i) = gauss(rng);
  const double norm = theta_tail.norm();
  theta_tail = norm > 0 && theta_tail_norm > 0 ? Vector(theta_tail * (theta_tail_norm / norm))
                                               : Vector::Zero(half);

  LinearProblem p;
  p.cov = CovarianceSpec::spiked(CovarianceSpec::low_rank_factor(a), eta, half);
  p.theta_star = Vector::Zero(d);
  p.theta_star.head(half) = pseudo_inverse(a).transpose() * beta;
  p.theta_star.tail(half) = theta_tail;
  p.sigma2 = sigma2;
  p.mu = Vector::Zero(d);
  Matrix f = Matrix::Zero(d, r + half);
  f.topLeftCorner(half, r) = a;
  f.bottomRightCorner(half, half) = std::sqrt(eta) * Matrix::Identity(half, half);
  p.sampling_factor = std::move(f);
  return p;
}

double population_risk(const LinearProblem& problem, const Vector& theta) {
  if (theta.size() != problem.dim())
    throw std::invalid_argument("population_risk: dimension mismatch");
  return problem.sigma_norm_sq(theta - problem.theta_star) + problem.sigma2;
}

}  // namespace zimp
