#include "zimp/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "zimp/rng.hpp"

namespace zimp {

namespace {

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  Index i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Index index_or(const json& j, const char* key, Index fallback) {
  return j.contains(key) ? j.at(key).get<Index>() : fallback;
}

}  // namespace

LinearProblem problem_from_json(const json& spec, std::uint64_t seed) {
  const std::string kind = spec.value("kind", "low-rank");
  const double sigma2 = number_or(spec, "sigma2", 2.0);

  if (kind == "identity") {
    const Index d = index_or(spec, "d", 10);
    Vector theta;
    if (spec.contains("theta_star")) {
      theta = vector_from_json(spec.at("theta_star"));
    } else {
      Rng rng = make_rng(seed, {fnv1a64("config-theta")});
      std::normal_distribution<double> gauss(0.0, 1.0);
      theta.resize(d);
      for (Index i = 0; i < d; ++i) theta(i) = gauss(rng);
    }
    return make_problem(CovarianceSpec::identity(d), std::move(theta), sigma2);
  }

  if (kind == "explicit") {
    if (!spec.contains("sigma") || !spec.contains("theta_star"))
      throw std::invalid_argument("problem config: explicit kind needs sigma and theta_star");
    const auto& rows = spec.at("sigma");
    const Index d = static_cast<Index>(rows.size());
    Matrix sigma(d, d);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != d)
        throw std::invalid_argument("problem config: sigma must be square");
      Index j = 0;
      for (const auto& x : row) sigma(i, j++) = x.get<double>();
      ++i;
    }
    return make_problem(CovarianceSpec::explicit_psd(std::move(sigma)),
                        vector_from_json(spec.at("theta_star")), sigma2);
  }

  const Index d = index_or(spec, "d", 300);
  const Index r = index_or(spec, "r", 5);
  const bool normalize = spec.value("normalize", true);

  Vector beta;
  if (spec.contains("beta") && spec.at("beta").is_array()) {
    beta = vector_from_json(spec.at("beta"));
    if (beta.size() != r) throw std::invalid_argument("problem config: beta must have length r");
  } else {
    Rng rng = make_rng(seed, {fnv1a64("config-beta")});
    std::normal_distribution<double> gauss(0.0, 1.0);
    beta.resize(r);
    for (Index i = 0; i < r; ++i) beta(i) = gauss(rng);
  }

  if (kind == "low-rank") {
    Vector mu = Vector::Zero(d);
    if (spec.contains("mu")) {
      if (spec.at("mu").is_number())
        mu.setConstant(spec.at("mu").get<double>());
      else
        mu = vector_from_json(spec.at("mu"));
      if (mu.size() != d) throw std::invalid_argument("problem config: mu must have length d");
    }
    return build_lowrank_problem(d, r, beta, mu, sigma2,
                                 derive_seed(seed, {fnv1a64("config-factor")}), normalize);
  }
  if (kind == "spiked") {
    return build_spiked_problem(d, r, number_or(spec, "theta_tail_norm", 0.2),
                                number_or(spec, "eta", 1.0), sigma2,
                                derive_seed(seed, {fnv1a64("config-factor")}), normalize);
  }
  throw std::invalid_argument("problem config: unknown kind '" + kind + "'");
}

MaskModel mask_from_json(const json& spec, const LinearProblem& problem,
                         std::uint64_t seed) {
  const std::string kind = spec.value("kind", "ho-mcar");
  const Index d = problem.dim();
  if (kind == "ho-mcar") return MaskModel::ho_mcar(d, number_or(spec, "rho", 0.5));
  if (kind == "without-replacement") {
    Index k;
    if (spec.contains("missing"))
      k = spec.at("missing").get<Index>();
    else
      k = std::min<Index>(d - 1, std::llround((1.0 - number_or(spec, "rho", 0.5)) * d));
    return MaskModel::without_replacement(d, k);
  }
  if (kind == "block") {
    const Index bs = index_or(spec, "block_size", 2);
    if (spec.contains("law")) {
      std::vector<double> law = spec.at("law").get<std::vector<double>>();
      return MaskModel::block_mcar(d, bs, std::move(law));
    }
    return MaskModel::block_mcar_equal(d, bs, number_or(spec, "rho", 0.5));
  }
  if (kind == "self-masking") {
    return calibrate_self_masking(problem, number_or(spec, "alpha_scale", 1.0),
                                  number_or(spec, "target", 0.5),
                                  derive_seed(seed, {fnv1a64("config-mask")}));
  }
  throw std::invalid_argument("mask config: unknown kind '" + kind + "'");
}

ExperimentSpec experiment_from_json(const json& spec) {
  ExperimentSpec e;
  e.id = spec.value("id", std::string());
  e.model_kind = spec.value("model", e.model_kind);
  e.mask_kind = spec.value("mask", e.mask_kind);
  if (spec.contains("d_grid")) e.d_grid = spec.at("d_grid").get<std::vector<Index>>();
  e.n = index_or(spec, "n", e.n);
  e.r = index_or(spec, "r", e.r);
  e.observe_rate = number_or(spec, "rate", e.observe_rate);
  e.repetitions = static_cast<int>(index_or(spec, "repetitions", e.repetitions));
  e.test_size = index_or(spec, "test_size", e.test_size);
  if (spec.contains("methods")) e.methods = spec.at("methods").get<std::vector<std::string>>();
  e.master_seed = spec.value("seed", e.master_seed);
  e.sigma2 = number_or(spec, "sigma2", e.sigma2);
  e.theta_tail_norm = number_or(spec, "theta_tail_norm", e.theta_tail_norm);
  e.eta = number_or(spec, "eta", e.eta);
  e.alpha_scale = number_or(spec, "alpha_scale", e.alpha_scale);
  e.ice_rounds = static_cast<int>(index_or(spec, "ice_rounds", e.ice_rounds));
  e.ice_ridge = number_or(spec, "ice_ridge", e.ice_ridge);
  e.timing = spec.value("timing", e.timing);
  e.validate();
  return e;
}

json experiment_to_json(const ExperimentSpec& e) {
  return json{{"id", e.effective_id()},
              {"model", e.model_kind},
              {"mask", e.mask_kind},
              {"d_grid", e.d_grid},
              {"n", e.n},
              {"r", e.r},
              {"rate", e.observe_rate},
              {"repetitions", e.repetitions},
              {"test_size", e.test_size},
              {"methods", e.methods},
              {"seed", e.master_seed},
              {"sigma2", e.sigma2},
              {"theta_tail_norm", e.theta_tail_norm},
              {"eta", e.eta},
              {"alpha_scale", e.alpha_scale},
              {"ice_rounds", e.ice_rounds},
              {"ice_ridge", e.ice_ridge},
              {"timing", e.timing}};
}

namespace {
json finite_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}
}  // namespace

json theory_report_to_json(const TheoryReport& r) {
  json j{{"d", r.d},
         {"l2", r.l2},
         {"L2", r.L2},
         {"b_imp", r.b_imp},
         {"eps_tol", r.eps_tol},
         {"sigma_imp_lambda_min", r.sigma_imp_lambda_min},
         {"Lambda_imp", r.Lambda_imp},
         {"b_ridge_Lambda_imp", r.b_ridge_Lambda_imp},
         {"general_upper_ok", r.general_upper_ok},
         {"theta_imp_sq_norm", r.theta_imp_sq_norm},
         {"v_lambda_min", r.v_lambda_min},
         {"norm_bound", finite_or_null(r.norm_bound)},
         {"norm_applicable", r.norm_applicable},
         {"norm_ok", r.norm_applicable ? json(r.norm_ok) : json(nullptr)},
         {"lambda_imp", finite_or_null(r.lambda_imp)},
         {"lambda_imp_prime", finite_or_null(r.lambda_imp_prime)},
         {"b_ridge_lambda_imp", finite_or_null(r.b_ridge_lambda_imp)},
         {"b_ridge_lambda_imp_prime", finite_or_null(r.b_ridge_lambda_imp_prime)},
         {"sandwich_applicable", r.sandwich_applicable},
         {"sandwich_ok", r.sandwich_applicable ? json(r.sandwich_ok) : json(nullptr)},
         {"all_ok", r.all_ok()},
         {"theta_imp", vector_to_json(r.theta_imp)}};
  return j;
}

namespace {
json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}
}  // namespace

json mask_stats_to_json(const MaskStats& st) {
  json j{{"rho", vector_to_json(st.rho)},
         {"V", matrix_to_json(st.V)},
         {"C", matrix_to_json(st.C)},
         {"lambda_max_C", st.lambda_max_C},
         {"L2", st.L2},
         {"Lambda_imp", st.Lambda_imp},
         {"exact", st.n_draws == 0}};
  if (!std::isnan(st.wor_paper_level)) j["wor_paper_level"] = st.wor_paper_level;
  if (st.n_draws > 0) {
    j["n_draws"] = st.n_draws;
    j["rho_se"] = vector_to_json(st.rho_se);
    j["V_se"] = matrix_to_json(st.V_se);
  }
  return j;
}

json verification_report_to_json(const std::vector<PropertyCheck>& checks) {
  json items = json::array();
  for (const auto& c : checks)
    items.push_back(json{{"suite", c.suite},
                         {"name", c.name},
                         {"pass", c.pass},
                         {"margin", c.margin},
                         {"detail", c.detail}});
  return json{{"checks", items}, {"all_pass", all_pass(checks)}};
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << j.dump(2) << '\n';
}

}  // namespace zimp
