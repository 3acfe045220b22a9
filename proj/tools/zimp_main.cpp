#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "zimp/config.hpp"
#include "zimp/dataset.hpp"
#include "zimp/harness.hpp"
#include "zimp/impute.hpp"
#include "zimp/io.hpp"
#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/regress.hpp"
#include "zimp/theory.hpp"
#include "zimp/verify.hpp"

namespace {

using zimp::Index;
using zimp::json;
using zimp::Matrix;
using zimp::Vector;

json vector_json(const Vector& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector parse_grid(const std::string& csv) {
  Vector out;
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  out.resize(static_cast<Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out(static_cast<Index>(i)) = vals[i];
  return out;
}

int cmd_gen(const std::string& config_path, Index n, std::uint64_t seed,
            const std::string& out_path) {
  const json cfg = zimp::load_json_file(config_path);
  const zimp::LinearProblem problem = zimp::problem_from_json(cfg.at("problem"), seed);
  const zimp::MaskModel mask = zimp::mask_from_json(cfg.value("mask", json{{"kind", "ho-mcar"}}),
                                                    problem, seed);
  const zimp::Dataset ds = zimp::sample_dataset(problem, mask, n, seed);
  zimp::write_dataset_csv(ds, out_path);
  json meta{{"seed", seed},
            {"n", n},
            {"d", problem.dim()},
            {"schema", "x_0..x_{d-1},y,p_0..p_{d-1}"},
            {"problem", cfg.at("problem")},
            {"mask", cfg.value("mask", json{{"kind", "ho-mcar"}})},
            {"derived",
             {{"theta_star", vector_json(problem.theta_star)},
              {"trace_sigma", problem.cov.trace()},
              {"signal", problem.signal()},
              {"sigma2", problem.sigma2}}}};
  zimp::write_json_file(meta, out_path + ".meta.json");
  std::cout << "wrote " << n << " rows (d = " << problem.dim() << ") to " << out_path << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& method,
            const std::string& imputer, int ice_rounds, double ice_ridge, double gamma,
            double kappa, double lambda, const std::string& lambda_grid,
            std::uint64_t seed, const std::string& out_path) {
  const zimp::RawDataset data = zimp::read_dataset_csv(data_path);
  const Index d = data.X.cols();
  const Index n = data.X.rows();

  json out{{"method", method}, {"imputer", imputer}, {"n", n}, {"d", d}, {"seed", seed}};

  if (method == "pattern") {
    const zimp::PatternRegression fit = zimp::PatternRegression::fit(
        zimp::impute_zero(data.X, data.P), data.P, data.y);
    out["patterns"] = fit.pattern_count();
  } else if (method == "opti") {
    const zimp::Imputer imp = zimp::Imputer::fit_optimal_constant(data.X, data.P, data.y);
    out["augmented_theta"] = vector_json(imp.augmented_theta());
    out["constants"] = vector_json(imp.constants());
  } else {
    Matrix design;
    if (imputer == "zero") {
      design = zimp::impute_zero(data.X, data.P);
    } else if (imputer == "ice") {
      const zimp::Imputer imp =
          zimp::Imputer::fit_iterative_conditional(data.X, data.P, ice_rounds, ice_ridge);
      design = imp.transform(data.X, data.P);
    } else if (imputer == "opti") {
      const zimp::Imputer imp = zimp::Imputer::fit_optimal_constant(data.X, data.P, data.y);
      design = imp.transform(data.X, data.P);
      out["constants"] = vector_json(imp.constants());
    } else {
      throw std::invalid_argument("unknown imputer '" + imputer + "'");
    }

    zimp::FitResult fit;
    if (method == "sgd") {
      zimp::SgdConfig cfg;
      cfg.kappa = kappa;
      if (gamma > 0) {
        cfg.rule = zimp::SgdConfig::StepRule::fixed;
        cfg.gamma = gamma;
      }
      fit = zimp::fit_averaged_sgd(design, data.y, cfg);
      out["step_warning"] = fit.step_warning;
    } else if (method == "ols") {
      fit = zimp::fit_ridge(design, data.y, 0.0);
    } else if (method == "ridge") {
      fit = zimp::fit_ridge(design, data.y, lambda);
    } else if (method == "ridge-loo") {
      const Vector grid = lambda_grid.empty() ? zimp::default_lambda_grid(d, n)
                                              : parse_grid(lambda_grid);
      fit = zimp::fit_ridge_loo(design, data.y, grid);
      out["lambda_grid"] = vector_json(fit.lambda_grid);
      out["loo_errors"] = vector_json(fit.loo_errors);
    } else {
      throw std::invalid_argument("unknown method '" + method + "'");
    }
    fit.seed = seed;
    out["theta"] = vector_json(fit.theta);
    out["hyperparameter"] = fit.hyperparameter;
    out["final_iterate_norm"] = fit.final_iterate_norm;
    out["average_iterate_norm"] = fit.average_iterate_norm;
  }

  if (out_path.empty())
    std::cout << out.dump(2) << "\n";
  else
    zimp::write_json_file(out, out_path);
  return 0;
}

int cmd_theory(const std::string& config_path, std::uint64_t seed,
               const std::string& out_path, bool check) {
  const json cfg = zimp::load_json_file(config_path);
  const zimp::LinearProblem problem = zimp::problem_from_json(cfg.at("problem"), seed);
  const zimp::MaskModel mask = zimp::mask_from_json(cfg.value("mask", json{{"kind", "ho-mcar"}}),
                                                    problem, seed);
  // Penalty levels use the realized largest diagonal second moment.
  const double l2 = problem.cov.matrix().diagonal().maxCoeff();
  const zimp::MaskStats stats = zimp::exact_mask_stats(mask, l2);
  const zimp::TheoryReport report = zimp::bound_bundle(problem, mask, stats);
  json j = zimp::theory_report_to_json(report);
  j["mask_stats"] = zimp::mask_stats_to_json(stats);
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    zimp::write_json_file(j, out_path);
  if (check && !report.all_ok()) {
    std::cerr << "theory check failed\n";
    return 1;
  }
  return 0;
}

int cmd_experiment(const std::string& config_path, std::uint64_t seed, bool seed_set,
                   const std::string& out_path, bool timing, bool serial) {
  json cfg = config_path.empty() ? json::object() : zimp::load_json_file(config_path);
  zimp::ExperimentSpec spec = zimp::experiment_from_json(cfg);
  if (seed_set) spec.master_seed = seed;
  if (timing) spec.timing = true;
  const auto rows =
      zimp::run_experiment(spec, serial ? zimp::ExecMode::serial : zimp::ExecMode::parallel);
  const std::string csv = zimp::results_csv(rows, spec.timing);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << csv;
  }
  int errors = 0;
  for (const auto& r : rows) errors += r.status != "ok";
  std::cerr << "ran " << rows.size() << " cells (" << errors << " errors)\n";
  return 0;
}

int cmd_verify(const std::string& suite, int seeds, double eps_scale, std::uint64_t seed,
               bool seed_set, const std::string& out_path) {
  zimp::VerifyOptions opts;
  opts.seeds = seeds;
  opts.eps_scale = eps_scale;
  if (seed_set) opts.master_seed = seed;
  const auto checks = zimp::run_verification(suite, opts);
  for (const auto& c : checks)
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.suite << "/" << c.name
              << "  margin=" << c.margin << "  (" << c.detail << ")\n";
  if (!out_path.empty()) zimp::write_json_file(zimp::verification_report_to_json(checks), out_path);
  return zimp::all_pass(checks) ? 0 : 1;
}

int cmd_summarize(const std::string& in_path, double confidence, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  const zimp::Summary summary = zimp::summarize_results_csv(in, confidence);
  for (const auto& e : summary.parse_errors) std::cerr << "warning: " << e << "\n";
  if (out_path.empty()) {
    zimp::write_summary_csv(summary, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    zimp::write_summary_csv(summary, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-imputation regression toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_path, out_path;
  int workers = 0;
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_path, "output path (stdout/stderr when omitted)");
  app.add_option("--workers", workers, "worker threads (0 = hardware)");

  auto* gen = app.add_subcommand("gen", "sample a dataset to CSV");
  Index gen_n = 500;
  gen->add_option("--n", gen_n, "number of rows");

  auto* fit = app.add_subcommand("fit", "fit one estimator on a dataset CSV");
  std::string data_path, method = "sgd", imputer = "zero", lambda_grid;
  int ice_rounds = 10;
  double ice_ridge = 1e-3, gamma = 0, kappa = 1.0, lambda = 0;
  fit->add_option("--data", data_path, "dataset CSV")->required();
  fit->add_option("--method", method, "sgd | ridge | ridge-loo | ols | pattern | opti");
  fit->add_option("--imputer", imputer, "zero | opti | ice");
  fit->add_option("--ice-rounds", ice_rounds, "iterative imputer rounds");
  fit->add_option("--ice-ridge", ice_ridge, "iterative imputer ridge level");
  fit->add_option("--gamma", gamma, "fixed SGD step size (0 = dimension rule)");
  fit->add_option("--kappa", kappa, "dimension-rule scale");
  fit->add_option("--lambda", lambda, "ridge level for --method ridge");
  fit->add_option("--lambda-grid", lambda_grid, "comma-separated grid for ridge-loo");

  auto* theory = app.add_subcommand("theory", "closed-form bias/bound report");
  bool check = false;
  theory->add_flag("--check", check, "exit nonzero unless every bound holds");

  auto* experiment = app.add_subcommand("experiment", "run a sweep to CSV");
  bool timing = false, serial = false;
  experiment->add_flag("--timing", timing, "record wall time per cell");
  experiment->add_flag("--serial", serial, "run cells serially");

  auto* verify = app.add_subcommand("verify", "run the property suites");
  std::string suite = "all";
  int seeds = 20;
  double eps_scale = 1.0;
  verify->add_option("--suite", suite, "theory | masking | regress | all");
  verify->add_option("--seeds", seeds, "instances per property");
  verify->add_option("--eps-scale", eps_scale, "tolerance scale (0 = negative control)");

  auto* summarize = app.add_subcommand("summarize", "aggregate a results CSV");
  std::string in_path;
  double confidence = 0.95;
  summarize->add_option("--in", in_path, "results CSV")->required();
  summarize->add_option("--confidence", confidence, "confidence level");

  CLI11_PARSE(app, argc, argv);
  zimp::set_max_threads(workers);

  try {
    if (gen->parsed()) return cmd_gen(config_path, gen_n, seed, out_path.empty() ? "data.csv" : out_path);
    if (fit->parsed())
      return cmd_fit(data_path, method, imputer, ice_rounds, ice_ridge, gamma, kappa, lambda,
                     lambda_grid, seed, out_path);
    if (theory->parsed()) return cmd_theory(config_path, seed, out_path, check);
    if (experiment->parsed())
      return cmd_experiment(config_path, seed, seed_opt->count() > 0, out_path, timing, serial);
    if (verify->parsed())
      return cmd_verify(suite, seeds, eps_scale, seed, seed_opt->count() > 0, out_path);
    if (summarize->parsed()) return cmd_summarize(in_path, confidence, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
