#include "zimp/masking.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace zimp {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_binom(Index n, Index k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

double lambda_max_sym(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Matrix s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

MaskModel MaskModel::ho_mcar(Index d, double rho) {
  if (d < 1) throw std::invalid_argument("MaskModel: dimension must be positive");
  if (!(rho > 0.0 && rho <= 1.0))
    throw std::invalid_argument("MaskModel: rho must lie in (0, 1]; always-missing components are rejected");
  MaskModel m;
  m.kind_ = Kind::ho_mcar;
  m.d_ = d;
  m.rho_ = rho;
  return m;
}

MaskModel MaskModel::block_mcar(Index d, Index block_size, std::vector<double> block_law) {
  if (d < 1) throw std::invalid_argument("MaskModel: dimension must be positive");
  if (block_size < 1 || block_size > 16)
    throw std::invalid_argument("MaskModel: block size must lie in [1, 16]");
  const std::size_t states = std::size_t{1} << block_size;
  if (block_law.size() != states)
    throw std::invalid_argument("MaskModel: block law must have 2^block_size entries");
  double sum = 0;
  for (double p : block_law) {
    if (p < 0) throw std::invalid_argument("MaskModel: block law entries must be >= 0");
    sum += p;
  }
  if (sum <= 0) throw std::invalid_argument("MaskModel: block law must have positive mass");
  for (double& p : block_law) p /= sum;
  // Reject always-missing components.
  for (Index b = 0; b < block_size; ++b) {
    double marg = 0;
    for (std::size_t s = 0; s < states; ++s)
      if (s >> b & 1u) marg += block_law[s];
    if (marg <= 0)
      throw std::invalid_argument("MaskModel: block law leaves a component always missing");
  }
  MaskModel m;
  m.kind_ = Kind::block_mcar;
  m.d_ = d;
  m.block_size_ = block_size;
  m.block_law_ = std::move(block_law);
  return m;
}

MaskModel MaskModel::block_mcar_equal(Index d, Index block_size, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("MaskModel: rho must lie in (0, 1]");
  std::vector<double> law(std::size_t{1} << block_size, 0.0);
  law.front() = 1.0 - rho;  // all missing
  law.back() = rho;         // all observed
  return block_mcar(d, block_size, std::move(law));
}

MaskModel MaskModel::without_replacement(Index d, Index n_missing) {
  if (d < 1) throw std::invalid_argument("MaskModel: dimension must be positive");
  if (n_missing < 0 || n_missing >= d)
    throw std::invalid_argument("MaskModel: n_missing must lie in [0, d-1]");
  MaskModel m;
  m.kind_ = Kind::without_replacement;
  m.d_ = d;
  m.k_missing_ = n_missing;
  return m;
}

MaskModel MaskModel::self_masking(Vector alpha, Vector intercept, double target_rate) {
  if (alpha.size() < 1 || alpha.size() != intercept.size())
    throw std::invalid_argument("MaskModel: alpha and intercept must have equal positive length");
  MaskModel m;
  m.kind_ = Kind::self_masking;
  m.d_ = alpha.size();
  m.alpha_ = std::move(alpha);
  m.intercept_ = std::move(intercept);
  m.target_rate_ = target_rate;
  return m;
}

void MaskModel::sample_into(Rng& rng, const double* x_row, double* out) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (kind_) {
    case Kind::ho_mcar:
      for (Index j = 0; j < d_; ++j) out[j] = unif(rng) < rho_ ? 1.0 : 0.0;
      return;
    case Kind::block_mcar: {
      for (Index start = 0; start < d_; start += block_size_) {
        const Index width = std::min(block_size_, d_ - start);
        double u = unif(rng);
        std::size_t state = block_law_.size() - 1;
        for (std::size_t s = 0; s < block_law_.size(); ++s) {
          u -= block_law_[s];
          if (u < 0) {
            state = s;
            break;
          }
        }
        for (Index b = 0; b < width; ++b) out[start + b] = state >> b & 1u ? 1.0 : 0.0;
      }
      return;
    }
    case Kind::without_replacement: {
      for (Index j = 0; j < d_; ++j) out[j] = 1.0;
      // Partial Fisher-Yates over component indices; first k drawn are missing.
      std::vector<Index> idx(static_cast<std::size_t>(d_));
      for (Index j = 0; j < d_; ++j) idx[static_cast<std::size_t>(j)] = j;
      for (Index t = 0; t < k_missing_; ++t) {
        std::uniform_int_distribution<Index> pick(t, d_ - 1);
        std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(pick(rng))]);
        out[idx[static_cast<std::size_t>(t)]] = 0.0;
      }
      return;
    }
    case Kind::self_masking: {
      if (x_row == nullptr)
        throw std::invalid_argument("MaskModel: self-masking requires the covariate row");
      for (Index j = 0; j < d_; ++j) {
        const double p = sigmoid(alpha_(j) * x_row[j] + intercept_(j));
        out[j] = unif(rng) < p ? 1.0 : 0.0;
      }
      return;
    }
  }
}

Vector MaskModel::sample(Rng& rng) const {
  Vector p(d_);
  sample_into(rng, nullptr, p.data());
  return p;
}

Vector MaskModel::sample(Rng& rng, const Vector& x_row) const {
  if (x_row.size() != d_) throw std::invalid_argument("MaskModel: covariate row has wrong length");
  Vector p(d_);
  sample_into(rng, x_row.data(), p.data());
  return p;
}

double MaskModel::pattern_prob(const std::vector<int>& pattern) const {
  if (static_cast<Index>(pattern.size()) != d_)
    throw std::invalid_argument("MaskModel: pattern has wrong length");
  switch (kind_) {
    case Kind::ho_mcar: {
      double p = 1.0;
      for (int b : pattern) p *= b ? rho_ : 1.0 - rho_;
      return p;
    }
    case Kind::without_replacement: {
      Index zeros = 0;
      for (int b : pattern) zeros += b == 0;
      if (zeros != k_missing_) return 0.0;
      return std::exp(-log_binom(d_, k_missing_));
    }
    case Kind::block_mcar: {
      double p = 1.0;
      for (Index start = 0; start < d_; start += block_size_) {
        const Index width = std::min(block_size_, d_ - start);
        double block_p = 0.0;
        for (std::size_t s = 0; s < block_law_.size(); ++s) {
          bool match = true;
          for (Index b = 0; b < width && match; ++b)
            match = (s >> b & 1u) == static_cast<unsigned>(pattern[start + b] ? 1 : 0);
          if (match) block_p += block_law_[s];
        }
        p *= block_p;
      }
      return p;
    }
    case Kind::self_masking:
      throw std::logic_error("MaskModel: self-masking has no covariate-free pattern law");
  }
  return 0.0;
}

double MaskModel::rho() const {
  if (kind_ != Kind::ho_mcar) throw std::logic_error("MaskModel: rho() is for ho_mcar");
  return rho_;
}

Index MaskModel::n_missing() const {
  if (kind_ != Kind::without_replacement)
    throw std::logic_error("MaskModel: n_missing() is for without_replacement");
  return k_missing_;
}

Index MaskModel::block_size() const {
  if (kind_ != Kind::block_mcar) throw std::logic_error("MaskModel: block_size() is for block_mcar");
  return block_size_;
}

const std::vector<double>& MaskModel::block_law() const {
  if (kind_ != Kind::block_mcar) throw std::logic_error("MaskModel: block_law() is for block_mcar");
  return block_law_;
}

const Vector& MaskModel::alpha() const {
  if (kind_ != Kind::self_masking) throw std::logic_error("MaskModel: alpha() is for self_masking");
  return alpha_;
}

const Vector& MaskModel::intercept() const {
  if (kind_ != Kind::self_masking)
    throw std::logic_error("MaskModel: intercept() is for self_masking");
  return intercept_;
}

double MaskModel::target_rate() const {
  if (kind_ != Kind::self_masking)
    throw std::logic_error("MaskModel: target_rate() is for self_masking");
  return target_rate_;
}

Vector MaskModel::marginal_rho() const {
  Vector r(d_);
  switch (kind_) {
    case Kind::ho_mcar:
      r.setConstant(rho_);
      return r;
    case Kind::without_replacement:
      r.setConstant(static_cast<double>(d_ - k_missing_) / static_cast<double>(d_));
      return r;
    case Kind::block_mcar: {
      for (Index j = 0; j < d_; ++j) {
        const Index b = j % block_size_;
        double marg = 0;
        for (std::size_t s = 0; s < block_law_.size(); ++s)
          if (s >> b & 1u) marg += block_law_[s];
        r(j) = marg;
      }
      return r;
    }
    case Kind::self_masking:
      throw std::logic_error("MaskModel: exact marginals unavailable for self-masking");
  }
  return r;
}

MaskStats exact_mask_stats(const MaskModel& model, double L2) {
  if (!model.is_mcar())
    throw std::invalid_argument("exact_mask_stats: closed forms exist for MCAR kinds only");
  if (L2 <= 0) throw std::invalid_argument("exact_mask_stats: L2 must be positive");
  const Index d = model.dim();
  MaskStats st;
  st.L2 = L2;
  st.rho = model.marginal_rho();
  st.V = Matrix::Zero(d, d);
  st.C = Matrix::Zero(d, d);
  switch (model.kind()) {
    case MaskModel::Kind::ho_mcar: {
      const double rho = model.rho();
      st.V.diagonal().setConstant(rho * (1.0 - rho));
      st.C.diagonal().setConstant((1.0 - rho) / rho);
      st.lambda_max_C = (1.0 - rho) / rho;
      break;
    }
    case MaskModel::Kind::without_replacement: {
      const Index k = model.n_missing();
      const double dd = static_cast<double>(d);
      const double kk = static_cast<double>(k);
      const double rho = (dd - kk) / dd;
      if (k > 0) {
        st.V.setConstant(d > 1 ? -kk * (dd - kk) / (dd * dd * (dd - 1.0)) : 0.0);
        st.V.diagonal().setConstant(rho * (1.0 - rho));
        st.C = st.V / (rho * rho);
        st.lambda_max_C = lambda_max_sym(st.C);
      }
      st.wor_paper_level = L2 * (kk + 1.0) / (dd - kk);
      break;
    }
    case MaskModel::Kind::block_mcar: {
      const Index bs = model.block_size();
      const auto& law = model.block_law();
      for (Index start = 0; start < d; start += bs) {
        const Index width = std::min(bs, d - start);
        for (Index a = 0; a < width; ++a) {
          for (Index b = a; b < width; ++b) {
            double m_ab = 0;
            for (std::size_t s = 0; s < law.size(); ++s)
              if ((s >> a & 1u) && (s >> b & 1u)) m_ab += law[s];
            const double v = m_ab - st.rho(start + a) * st.rho(start + b);
            st.V(start + a, start + b) = v;
            st.V(start + b, start + a) = v;
          }
        }
      }
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) st.C(i, j) = st.V(i, j) / (st.rho(i) * st.rho(j));
      st.lambda_max_C = lambda_max_sym(st.C);
      break;
    }
    case MaskModel::Kind::self_masking:
      break;  // unreachable
  }
  st.Lambda_imp = L2 * st.lambda_max_C;
  return st;
}

MaskStats mc_mask_stats(const MaskModel& model, const LinearProblem& problem,
                        std::int64_t n_draws, std::uint64_t seed, double L2,
                        ExecMode mode) {
  if (n_draws < 1000) throw std::invalid_argument("mc_mask_stats: need n_draws >= 1000");
  if (model.needs_covariates() && problem.dim() != model.dim())
    throw std::invalid_argument("mc_mask_stats: problem dimension mismatch");
  const Index d = model.dim();
  const ChunkGrid grid{n_draws, 8192};
  const std::int64_t nc = grid.chunks();
  std::vector<Vector> sum_p(static_cast<std::size_t>(nc));
  std::vector<Matrix> sum_pp(static_cast<std::size_t>(nc));

  const Matrix& f = problem.sampling_factor;
  const Index k_factor = f.cols();
  const bool needs_x = model.needs_covariates();

  run_chunks(grid, mode, [&](std::int64_t c, std::int64_t lo, std::int64_t hi) {
    Rng rng = make_rng(seed, {fnv1a64("mc-mask-stats"), static_cast<std::uint64_t>(c)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector sp = Vector::Zero(d);
    Matrix spp = Matrix::Zero(d, d);
    Vector pattern(d), x(d), z(k_factor);
    std::vector<Index> obs;
    obs.reserve(static_cast<std::size_t>(d));
    for (std::int64_t t = lo; t < hi; ++t) {
      const double* x_ptr = nullptr;
      if (needs_x) {
        for (Index i = 0; i < k_factor; ++i) z(i) = gauss(rng);
        x = problem.mu + f * z;
        x_ptr = x.data();
      }
      model.sample_into(rng, x_ptr, pattern.data());
      obs.clear();
      for (Index j = 0; j < d; ++j)
        if (pattern(j) == 1.0) obs.push_back(j);
      for (Index a : obs) {
        sp(a) += 1.0;
        for (Index b : obs)
          if (b >= a) spp(a, b) += 1.0;
      }
    }
    sum_p[static_cast<std::size_t>(c)] = std::move(sp);
    sum_pp[static_cast<std::size_t>(c)] = std::move(spp);
  });

  Vector tot_p = Vector::Zero(d);
  Matrix tot_pp = Matrix::Zero(d, d);
  for (std::int64_t c = 0; c < nc; ++c) {
    tot_p += sum_p[static_cast<std::size_t>(c)];
    tot_pp += sum_pp[static_cast<std::size_t>(c)];
  }
  const double n = static_cast<double>(n_draws);
  MaskStats st;
  st.L2 = L2;
  st.n_draws = n_draws;
  st.rho = tot_p / n;
  Matrix m = tot_pp / n;
  m = Matrix(m.selfadjointView<Eigen::Upper>());
  st.V = m - st.rho * st.rho.transpose();
  st.C = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (st.rho(i) > 0 && st.rho(j) > 0) st.C(i, j) = st.V(i, j) / (st.rho(i) * st.rho(j));
  st.lambda_max_C = lambda_max_sym(st.C);
  st.Lambda_imp = L2 * st.lambda_max_C;
  st.rho_se = (st.rho.array() * (1.0 - st.rho.array()) / n).sqrt();
  st.V_se = Matrix(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      const double mij = std::clamp(m(i, j), 0.0, 1.0);
      st.V_se(i, j) = std::sqrt(mij * (1.0 - mij) / n) + st.rho(i) * st.rho_se(j) +
                      st.rho(j) * st.rho_se(i);
    }
  return st;
}

namespace {

// E[sigmoid(a u + c)] for u ~ N(0,1), composite Simpson on [-10, 10].
double logistic_gaussian_mean(double a, double c, int panels) {
  const double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / panels;
  const double inv_sqrt2pi = 0.3989422804014327;
  auto f = [&](double u) {
    return sigmoid(a * u + c) * inv_sqrt2pi * std::exp(-0.5 * u * u);
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

MaskModel calibrate_self_masking(const LinearProblem& problem, double alpha_scale,
                                 double target_rate, std::uint64_t seed,
                                 bool use_quadrature, std::int64_t mc_draws) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw std::invalid_argument("calibrate_self_masking: target rate must lie in (0, 1)");
  const Index d = problem.dim();
  Vector alpha(d), intercept(d);
  const int panels =
      std::min(1 << 16, std::max(2048, static_cast<int>(512.0 * std::ceil(std::abs(alpha_scale)))));
  for (Index j = 0; j < d; ++j) {
    const double var = problem.marginal_variance(j);
    if (var < 1e-24)
      throw std::domain_error("calibrate_self_masking: degenerate covariate variance, bisection cannot bracket");
    const double sd = std::sqrt(var);
    const double mean = problem.mu(j);
    alpha(j) = alpha_scale / sd;
    const double a = alpha(j) * sd;  // standardized slope == alpha_scale

    // Mean observation rate as a function of the intercept t, strictly
    // increasing with limits 0 and 1.
    Vector draws;
    if (!use_quadrature) {
      Rng rng = make_rng(seed, {fnv1a64("self-mask-calibration"), static_cast<std::uint64_t>(j)});
      std::normal_distribution<double> gauss(0.0, 1.0);
      draws.resize(mc_draws);
      for (std::int64_t t = 0; t < mc_draws; ++t) draws(t) = gauss(rng);
    }
    auto rate = [&](double t) {
      const double c = alpha(j) * mean + t;
      if (use_quadrature) return logistic_gaussian_mean(a, c, panels);
      double acc = 0;
      for (std::int64_t i = 0; i < mc_draws; ++i) acc += sigmoid(a * draws(i) + c);
      return acc / static_cast<double>(mc_draws);
    };

    double center = std::log(target_rate / (1.0 - target_rate)) - alpha(j) * mean;
    double step = 1.0 + std::abs(a) * 10.0;
    double lo = center - step, hi = center + step;
    int expand = 0;
    while (rate(lo) > target_rate && expand++ < 64) lo -= step *= 2;
    step = 1.0 + std::abs(a) * 10.0;
    while (rate(hi) < target_rate && expand++ < 128) hi += step *= 2;
    if (rate(lo) > target_rate || rate(hi) < target_rate)
      throw std::domain_error("calibrate_self_masking: bisection failed to bracket the target rate");
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (rate(mid) < target_rate ? lo : hi) = mid;
    }
    intercept(j) = 0.5 * (lo + hi);
  }
  return MaskModel::self_masking(std::move(alpha), std::move(intercept), target_rate);
}

}  // namespace zimp
