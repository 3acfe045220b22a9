#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reference_kernels.hpp"
#include "zimp/linalg.hpp"
#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/theory.hpp"

using namespace zimp;

namespace {

// Fully redundant design: Sigma = all-ones, theta* = e_1, sigma2 = 0.
LinearProblem redundant_problem(Index d) {
  Matrix a = Matrix::Ones(d, 1);
  Vector theta = Vector::Zero(d);
  theta(0) = 1.0;
  LinearProblem p = make_problem(CovarianceSpec::low_rank_factor(a), theta, 0.0);
  return p;
}

// Orthonormal basis with entries +-1/sqrt(d) (Sylvester construction),
// giving a low-rank-equal covariance with unit diagonal.
Matrix hadamard_basis(Index d, Index r) {
  Matrix h(1, 1);
  h << 1;
  while (h.rows() < d) {
    Matrix next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, -h;
    h = next;
  }
  return h.leftCols(r) / std::sqrt(static_cast<double>(d));
}

}  // namespace

TEST_CASE("fully redundant design risks") {
  const Index d = 10;
  LinearProblem p = redundant_problem(d);
  MaskStats st = exact_mask_stats(MaskModel::ho_mcar(d, 0.5), 1.0);

  Vector theta1 = Vector::Zero(d);
  theta1(0) = 1.0;
  CHECK(std::abs(imputed_risk(p, st, theta1) - 0.5) < 1e-10);

  Vector theta2 = Vector::Constant(d, 2.0 / d);
  CHECK(std::abs(imputed_risk(p, st, theta2) - 0.1) < 1e-10);

  const double b = imputation_bias(p, st);
  CHECK(b <= 1.0 / d);
  CHECK(b > 0.0);
  // Closed form for this design: 1/(d+1).
  CHECK(b == doctest::Approx(1.0 / (d + 1)).epsilon(1e-10));

  // At d = 4 the optimum beats theta2, whose risk is 1/4.
  LinearProblem p4 = redundant_problem(4);
  MaskStats st4 = exact_mask_stats(MaskModel::ho_mcar(4, 0.5), 1.0);
  CHECK(optimal_imputed_predictor(p4, st4).risk <= 0.25 + 1e-12);
}

TEST_CASE("no missingness collapses everything") {
  // Full-rank covariance: at rho = 1 the imputed second moment is Sigma
  // itself, which must stay invertible for the optimum to be unique.
  Rng cov_rng = make_rng(30);
  std::normal_distribution<double> gg(0, 1);
  Matrix g6(6, 8);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 8; ++j) g6(i, j) = gg(cov_rng);
  Vector theta6(6);
  for (Index i = 0; i < 6; ++i) theta6(i) = gg(cov_rng);
  LinearProblem p = make_problem(CovarianceSpec::explicit_psd(g6 * g6.transpose() / 8.0),
                                 theta6, 0.7);
  MaskModel mask = MaskModel::ho_mcar(6, 1.0);
  MaskStats st = exact_mask_stats(mask, 1.0);
  Rng rng = make_rng(4);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 10; ++k) {
    Vector theta(6);
    for (Index i = 0; i < 6; ++i) theta(i) = g(rng);
    CHECK(imputed_risk(p, st, theta) == doctest::Approx(population_risk(p, theta)).epsilon(1e-12));
  }
  OptimalImputed opt = optimal_imputed_predictor(p, st);
  CHECK((opt.theta - p.theta_star).norm() < 1e-8);
  CHECK(imputation_bias(p, st) == doctest::Approx(0.0));
  TheoryReport rep = bound_bundle(p, mask, st);
  CHECK(std::abs(rep.b_imp) <= 1e-12);
  CHECK(rep.all_ok());
  CHECK(rep.general_upper_ok);
}

TEST_CASE("scalar closed forms") {
  // d = 1, Sigma = 1, theta* = 1, sigma2 = 0, rho = 1/2.
  LinearProblem p = make_problem(CovarianceSpec::identity(1), Vector::Ones(1), 0.0);
  MaskStats st = exact_mask_stats(MaskModel::ho_mcar(1, 0.5), 1.0);
  OptimalImputed opt = optimal_imputed_predictor(p, st);
  CHECK(opt.theta(0) == doctest::Approx(1.0));
  CHECK(imputation_bias(p, st) == doctest::Approx(0.5));
  // Ridge bias at lambda = (1-rho)/rho = 1 matches the bias exactly here.
  CHECK(ridge_bias(p, 1.0) == doctest::Approx(0.5));
  CHECK(ridge_bias(p, 0.0) == 0.0);
}

TEST_CASE("ridge bias single mode") {
  const Index d = 4;
  Vector theta = Vector::Zero(d);
  theta(0) = 1.0;
  LinearProblem p = make_problem(CovarianceSpec::identity(d), theta, 0.0);
  CHECK(ridge_bias(p, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ridge_bias(p, -1.0), std::invalid_argument);
}

TEST_CASE("imputed risk equals the shrink-plus-penalty route and monte carlo") {
  LinearProblem p = build_lowrank_problem(12, 4, Vector::Ones(4), Vector::Zero(12), 0.8, 17);
  MaskModel mask = MaskModel::without_replacement(12, 5);
  MaskStats st = exact_mask_stats(mask, 1.0);
  Rng rng = make_rng(18);
  std::normal_distribution<double> g(0, 1);
  Vector theta(12);
  for (Index i = 0; i < 12; ++i) theta(i) = g(rng);

  const double direct = imputed_risk(p, st, theta);
  const double penalty_route = imputed_risk_via_penalty(p, st, theta);
  CHECK(std::abs(direct - penalty_route) < 1e-10 * (1.0 + std::abs(direct)));

  McEstimate mc = mc_imputed_risk(p, mask, theta, 1000000, 19);
  CHECK(std::abs(direct - mc.value) < 4.0 * mc.se);
}

TEST_CASE("bound bundle on the tight homogeneous case") {
  // Identity covariance: l2 = L2 = 1, so both sandwich levels coincide at
  // (1-rho)/rho and the bias equals the ridge bias exactly.
  const Index d = 5;
  Vector theta = Vector::Constant(d, 0.7);
  LinearProblem p = make_problem(CovarianceSpec::identity(d), theta, 0.3);
  MaskModel mask = MaskModel::ho_mcar(d, 0.5);
  TheoryReport rep = bound_bundle(p, mask, exact_mask_stats(mask, 1.0));
  CHECK(rep.lambda_imp == doctest::Approx(1.0));
  CHECK(rep.lambda_imp_prime == doctest::Approx(1.0));
  CHECK(rep.Lambda_imp == doctest::Approx(1.0));
  CHECK(rep.sandwich_applicable);
  CHECK(rep.sandwich_ok);
  CHECK(rep.norm_applicable);
  CHECK(rep.norm_ok);
  CHECK(rep.b_imp == doctest::Approx(rep.b_ridge_lambda_imp).epsilon(1e-10));
}

TEST_CASE("bound bundle across random equal low-rank instances") {
  Rng rng = make_rng(71);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 20; ++k) {
    Vector theta(50);
    for (Index i = 0; i < 50; ++i) theta(i) = g(rng) / 7.0;
    LinearProblem p = make_problem(CovarianceSpec::low_rank_equal(50, 5, 50.0, rng()), theta, 0.2);
    MaskModel mask = MaskModel::ho_mcar(50, 0.5);
    TheoryReport rep = bound_bundle(p, mask, exact_mask_stats(mask, 1.0));
    CHECK(rep.sandwich_ok);
    CHECK(rep.norm_ok);
    CHECK(rep.general_upper_ok);
  }
}

TEST_CASE("structured example bounds") {
  MaskStats st64 = exact_mask_stats(MaskModel::ho_mcar(64, 0.5), 1.0);

  SUBCASE("equal low-rank with unit diagonal") {
    // Hadamard eigenbasis keeps diag(Sigma) = 1, so the level is exactly 1
    // at rho = 1/2 and the bound is (r/d) * signal.
    const Index d = 64, r = 4;
    Matrix basis = hadamard_basis(d, r);
    Matrix factor = basis * std::sqrt(static_cast<double>(d) / r);
    Rng rng = make_rng(83);
    std::normal_distribution<double> g(0, 1);
    Vector theta(d);
    for (Index i = 0; i < d; ++i) theta(i) = g(rng) / 8.0;
    LinearProblem p = make_problem(CovarianceSpec::low_rank_factor(factor), theta, 0.0);
    CHECK(std::abs(p.cov.matrix().diagonal().maxCoeff() - 1.0) < 1e-12);

    const double bound = example_bound(p, st64, StructuredBound::low_rank_equal);
    CHECK(bound == doctest::Approx(static_cast<double>(r) / d * p.signal()).epsilon(1e-10));
    CHECK(imputation_bias(p, st64) <= bound + 1e-9);
  }

  SUBCASE("full-rank degenerate case dominates the bias") {
    Rng rng = make_rng(84);
    std::normal_distribution<double> g(0, 1);
    Vector theta(8);
    for (Index i = 0; i < 8; ++i) theta(i) = g(rng);
    LinearProblem p = make_problem(CovarianceSpec::identity(8), theta, 0.0);
    MaskStats st = exact_mask_stats(MaskModel::ho_mcar(8, 0.5), 1.0);
    const double bound = example_bound(p, st, StructuredBound::low_rank_equal);
    CHECK(bound == doctest::Approx(p.signal()));  // level 1, r = d
    CHECK(imputation_bias(p, st) <= bound + 1e-9);
  }

  SUBCASE("alignment-ordered bound carries the harmonic factor") {
    // Distinct decreasing eigenvalues keep the eigenbasis unique, so the
    // alignment ordering against theta* is well defined.
    const Index d = 64, r = 4;
    Matrix basis = hadamard_basis(d, r);
    Matrix factor(d, r);
    for (Index j = 0; j < r; ++j) factor.col(j) = basis.col(j) * std::sqrt(16.0 / (j + 1.0));
    // theta* aligned mostly with the leading eigenvector.
    Vector theta = basis.col(0) * 1.0 + basis.col(1) * 0.5 + basis.col(2) * 0.25 +
                   basis.col(3) * 0.125;
    LinearProblem p = make_problem(CovarianceSpec::low_rank_factor(factor), theta, 0.0);
    const double harmonic = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
    const double level = p.cov.matrix().diagonal().maxCoeff();  // lambda_max(C) = 1 at rho = 1/2
    const double bound = example_bound(p, st64, StructuredBound::compatible_decay);
    CHECK(bound == doctest::Approx(level * static_cast<double>(r) / p.cov.trace() * harmonic *
                                   p.signal())
                       .epsilon(1e-10));
    CHECK(imputation_bias(p, st64) <= bound + 1e-9);

    // Reversed alignment violates the ordering precondition.
    Vector bad = basis.col(3);
    LinearProblem pbad = make_problem(CovarianceSpec::low_rank_factor(factor), bad, 0.0);
    CHECK_THROWS_AS(example_bound(pbad, st64, StructuredBound::compatible_decay),
                    std::invalid_argument);
  }

  SUBCASE("spiked bound reduces to the equal low-rank bound scaled by 1/(1-eta)") {
    const Index half = 32, r = 4, d = 64;
    const double eta = 0.25;
    Matrix basis = hadamard_basis(half, r);
    // Top-block trace d - eta*half so that tr(Sigma) = d.
    Matrix factor = basis * std::sqrt((static_cast<double>(d) - eta * half) / r);
    CovarianceSpec spec = CovarianceSpec::spiked(CovarianceSpec::low_rank_factor(factor), eta, half);
    Rng rng = make_rng(85);
    std::normal_distribution<double> g(0, 1);
    Vector theta = Vector::Zero(d);
    for (Index i = 0; i < half; ++i) theta(i) = g(rng) / 8.0;  // zero tail block
    LinearProblem p = make_problem(spec, theta, 0.0);
    CHECK(std::abs(p.cov.trace() - d) < 1e-9);

    MaskStats st = exact_mask_stats(MaskModel::ho_mcar(d, 0.5), 1.0);
    const double level = p.cov.matrix().diagonal().maxCoeff() * st.lambda_max_C;
    const double bound = example_bound(p, st, StructuredBound::spiked);
    CHECK(bound == doctest::Approx(level * r / (d * (1.0 - eta)) * p.signal()).epsilon(1e-9));
    CHECK(imputation_bias(p, st) <= bound + 1e-9);
  }

  SUBCASE("structure mismatch is rejected") {
    Rng rng = make_rng(86);
    LinearProblem p = build_lowrank_problem(10, 3, Vector::Ones(3), Vector::Zero(10), 0.1, rng());
    MaskStats st = exact_mask_stats(MaskModel::ho_mcar(10, 0.5), 1.0);
    // Random factor spectra are not equal-eigenvalue.
    CHECK_THROWS_AS(example_bound(p, st, StructuredBound::low_rank_equal), std::invalid_argument);
    CHECK_THROWS_AS(example_bound(p, st, StructuredBound::spiked), std::invalid_argument);
  }
}

TEST_CASE("gaussian bayes risk with missing inputs") {
  SUBCASE("no missingness gives the noise floor") {
    LinearProblem p = build_lowrank_problem(5, 2, Vector::Ones(2), Vector::Zero(5), 0.4, 5);
    MisBayesRisk mis = gaussian_mis_bayes_risk(p, MaskModel::ho_mcar(5, 1.0), 1 << 6, 1);
    CHECK(mis.exact);
    CHECK(mis.value == doctest::Approx(0.4).epsilon(1e-10));
  }
  SUBCASE("scalar case splits the variance") {
    LinearProblem p = make_problem(CovarianceSpec::identity(1), Vector::Ones(1), 0.0);
    MisBayesRisk mis = gaussian_mis_bayes_risk(p, MaskModel::ho_mcar(1, 0.5), 4, 1);
    CHECK(mis.value == doctest::Approx(0.5));
  }
  SUBCASE("risk chain on a random instance") {
    LinearProblem p = build_lowrank_problem(8, 3, Vector::Ones(3), Vector::Zero(8), 0.6, 9);
    MaskModel mask = MaskModel::ho_mcar(8, 0.5);
    MaskStats st = exact_mask_stats(mask, 1.0);
    MisBayesRisk mis = gaussian_mis_bayes_risk(p, mask, 1 << 10, 2);
    const double rstar_imp = optimal_imputed_predictor(p, st).risk;
    CHECK(p.sigma2 <= mis.value + 1e-10);
    CHECK(mis.value <= rstar_imp + 1e-10);
    CHECK(rstar_imp - mis.value <= imputation_bias(p, st) + 1e-9);
  }
  SUBCASE("monte carlo path agrees with enumeration") {
    LinearProblem p = build_lowrank_problem(6, 2, Vector::Ones(2), Vector::Zero(6), 0.2, 11);
    MaskModel mask = MaskModel::ho_mcar(6, 0.6);
    MisBayesRisk exact = gaussian_mis_bayes_risk(p, mask, 1 << 8, 3);
    // A budget below 2^d forces the sampled path (with at least 1000 draws).
    MisBayesRisk mc = gaussian_mis_bayes_risk(p, mask, 48, 3);
    CHECK(exact.exact);
    CHECK_FALSE(mc.exact);
    CHECK(std::abs(exact.value - mc.value) < 5.0 * mc.se + 1e-12);
  }
  SUBCASE("self-masking is rejected") {
    LinearProblem p = build_lowrank_problem(4, 2, Vector::Ones(2), Vector::Zero(4), 0.2, 12);
    MaskModel mask = MaskModel::self_masking(Vector::Ones(4), Vector::Zero(4), 0.5);
    CHECK_THROWS_AS(gaussian_mis_bayes_risk(p, mask, 16, 1), std::invalid_argument);
  }
}

TEST_CASE("singular imputed moment is reported") {
  // A covariate with zero variance makes Sigma_imp singular.
  Matrix sigma = Matrix::Identity(3, 3);
  sigma(2, 2) = 0.0;
  LinearProblem p = make_problem(CovarianceSpec::explicit_psd(sigma), Vector::Ones(3), 0.0);
  MaskStats st = exact_mask_stats(MaskModel::ho_mcar(3, 0.5), 1.0);
  CHECK_THROWS_AS(optimal_imputed_predictor(p, st), std::runtime_error);
}

TEST_CASE("bias vanishes as observation becomes certain and grows as it vanishes") {
  LinearProblem p = build_lowrank_problem(12, 3, Vector::Ones(3), Vector::Zero(12), 0.5, 19);
  double prev = std::numeric_limits<double>::infinity();
  for (double rho : {0.05, 0.2, 0.5, 0.9, 0.999}) {
    const double b = imputation_bias(p, exact_mask_stats(MaskModel::ho_mcar(12, rho), 1.0));
    CHECK(b < prev + 1e-12);
    CHECK(b <= p.signal() + 1e-10);
    prev = b;
  }
}
