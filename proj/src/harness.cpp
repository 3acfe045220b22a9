#include "zimp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "zimp/dataset.hpp"
#include "zimp/impute.hpp"
#include "zimp/io.hpp"
#include "zimp/linalg.hpp"
#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/regress.hpp"
#include "zimp/rng.hpp"

namespace zimp {

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {
      "zero+sgd", "zero+ridge-loo", "opti", "ice+sgd", "ice+ridge-loo", "pattern", "naive"};
  return methods;
}

std::string ExperimentSpec::effective_id() const {
  return id.empty() ? model_kind + "-" + mask_kind : id;
}

void ExperimentSpec::validate() const {
  if (model_kind != "low-rank" && model_kind != "spiked")
    throw std::invalid_argument("ExperimentSpec: unknown model kind '" + model_kind + "'");
  if (mask_kind != "ho-mcar" && mask_kind != "self-masking" &&
      mask_kind != "without-replacement")
    throw std::invalid_argument("ExperimentSpec: unknown mask kind '" + mask_kind + "'");
  if (d_grid.empty()) throw std::invalid_argument("ExperimentSpec: empty d grid");
  for (Index d : d_grid)
    if (d < 1) throw std::invalid_argument("ExperimentSpec: dimensions must be positive");
  if (n < 1 || test_size < 1 || repetitions < 1 || r < 1)
    throw std::invalid_argument("ExperimentSpec: counts must be positive");
  if (!(observe_rate > 0.0 && observe_rate <= 1.0))
    throw std::invalid_argument("ExperimentSpec: observe rate must lie in (0, 1]");
  if (methods.empty()) return;  // empty sweep is allowed (header-only CSV)
  const auto& known = known_methods();
  for (const auto& m : methods)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw std::invalid_argument("ExperimentSpec: unknown method '" + m + "'");
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

struct CellOutcome {
  double excess = 0;
  double se = 0;
};

CellOutcome run_cell(const ExperimentSpec& spec, Index d, const std::string& method,
                     std::uint64_t seed) {
  LinearProblem problem = [&] {
    Rng rng = make_rng(seed, {fnv1a64("cell-coefs")});
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (spec.model_kind == "low-rank") {
      Vector beta(spec.r);
      for (Index i = 0; i < spec.r; ++i) beta(i) = gauss(rng);
      return build_lowrank_problem(d, spec.r, beta, Vector::Zero(d), spec.sigma2,
                                   derive_seed(seed, {fnv1a64("cell-factor")}));
    }
    return build_spiked_problem(d, spec.r, spec.theta_tail_norm, spec.eta, spec.sigma2,
                                derive_seed(seed, {fnv1a64("cell-factor")}));
  }();

  MaskModel mask = [&] {
    if (spec.mask_kind == "ho-mcar") return MaskModel::ho_mcar(d, spec.observe_rate);
    if (spec.mask_kind == "without-replacement") {
      const Index k = std::min<Index>(d - 1, std::llround((1.0 - spec.observe_rate) * d));
      return MaskModel::without_replacement(d, k);
    }
    return calibrate_self_masking(problem, spec.alpha_scale, spec.observe_rate,
                                  derive_seed(seed, {fnv1a64("cell-calibration")}));
  }();

  // Cells run inside a work pool, so everything below stays single-threaded.
  Dataset train = sample_dataset(problem, mask, spec.n,
                                 derive_seed(seed, {fnv1a64("cell-train")}), ExecMode::serial);
  Dataset test = sample_dataset(problem, mask, spec.test_size,
                                derive_seed(seed, {fnv1a64("cell-test")}), ExecMode::serial);

  // Sweeps use the fixed step size gamma = 1 / (d sqrt(n)).
  SgdConfig sgd_cfg;
  sgd_cfg.rule = SgdConfig::StepRule::fixed;
  sgd_cfg.gamma = 1.0 / (static_cast<double>(d) * std::sqrt(static_cast<double>(spec.n)));

  Vector pred;
  if (method == "naive") {
    pred = Vector::Zero(spec.test_size);
  } else if (method == "zero+sgd") {
    pred = predict(fit_averaged_sgd(train.Ximp, train.y, sgd_cfg), test.Ximp);
  } else if (method == "zero+ridge-loo") {
    pred = predict(fit_ridge_loo(train.Ximp, train.y, default_lambda_grid(d, spec.n)), test.Ximp);
  } else if (method == "opti") {
    // Optimal-constant imputation feeding the tuned linear model.
    const Imputer imp = Imputer::fit_optimal_constant(train.X, train.P, train.y);
    const Matrix xtr = imp.transform(train.X, train.P);
    const Matrix xte = imp.transform(test.X, test.P);
    pred = predict(fit_ridge_loo(xtr, train.y, default_lambda_grid(d, spec.n)), xte);
  } else if (method == "ice+sgd" || method == "ice+ridge-loo") {
    const Imputer imp =
        Imputer::fit_iterative_conditional(train.X, train.P, spec.ice_rounds, spec.ice_ridge);
    const Matrix xtr = imp.transform(train.X, train.P);
    const Matrix xte = imp.transform(test.X, test.P);
    const FitResult fit = method == "ice+sgd"
                              ? fit_averaged_sgd(xtr, train.y, sgd_cfg)
                              : fit_ridge_loo(xtr, train.y, default_lambda_grid(d, spec.n));
    pred = predict(fit, xte);
  } else if (method == "pattern") {
    pred = PatternRegression::fit(train.Ximp, train.P, train.y).predict(test.Ximp, test.P);
  } else {
    throw std::invalid_argument("unknown method '" + method + "'");
  }

  const Vector sq = (test.y - pred).array().square();
  const double mse = sq.mean();
  const double var = (sq.array() - mse).square().sum() / static_cast<double>(sq.size() - 1);
  CellOutcome out;
  out.excess = mse - spec.sigma2;
  out.se = std::sqrt(var / static_cast<double>(sq.size()));
  if (!std::isfinite(out.excess) || !std::isfinite(out.se))
    throw std::runtime_error("non-finite excess risk");
  return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, ExecMode mode) {
  spec.validate();
  struct Cell {
    Index d;
    std::size_t method;
    int rep;
  };
  std::vector<Cell> cells;
  for (Index d : spec.d_grid)
    for (std::size_t m = 0; m < spec.methods.size(); ++m)
      for (int rep = 0; rep < spec.repetitions; ++rep) cells.push_back({d, m, rep});

  std::vector<ResultRow> rows(cells.size());
  const ChunkGrid grid{static_cast<std::int64_t>(cells.size()), 1};
  run_chunks(grid, mode, [&](std::int64_t c, std::int64_t, std::int64_t) {
    const Cell& cell = cells[static_cast<std::size_t>(c)];
    const std::string& method = spec.methods[cell.method];
    ResultRow& row = rows[static_cast<std::size_t>(c)];
    row.experiment = spec.effective_id();
    row.model = spec.model_kind;
    row.mask = spec.mask_kind;
    row.d = cell.d;
    row.n = spec.n;
    row.method = method;
    row.repetition = cell.rep;
    row.seed = derive_seed(spec.master_seed,
                           {static_cast<std::uint64_t>(cell.d), fnv1a64(method),
                            static_cast<std::uint64_t>(cell.rep)});
    const auto start = std::chrono::steady_clock::now();
    try {
      const CellOutcome outcome = run_cell(spec, cell.d, method, row.seed);
      row.excess_risk = outcome.excess;
      row.std_error = outcome.se;
    } catch (const std::exception& e) {
      row.excess_risk = std::numeric_limits<double>::quiet_NaN();
      row.std_error = std::numeric_limits<double>::quiet_NaN();
      row.status = sanitize(std::string("error: ") + e.what());
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  });
  return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, bool timing, std::ostream& out) {
  out << "# zimp-results v1\n";
  out << "experiment,model,mask,d,n,method,repetition,seed,excess_risk,std_error,wall_ms,status\n";
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.model << ',' << r.mask << ',' << r.d << ',' << r.n << ','
        << r.method << ',' << r.repetition << ',' << r.seed << ','
        << format_double(r.excess_risk) << ',' << format_double(r.std_error) << ','
        << (timing ? format_double(r.wall_ms) : "na") << ',' << r.status << '\n';
  }
}

std::string results_csv(const std::vector<ResultRow>& rows, bool timing) {
  std::ostringstream out;
  write_results_csv(rows, timing, out);
  return out.str();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Summary summarize_results_csv(std::istream& in, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("summarize: confidence must lie in (0, 1)");
  const double z = normal_quantile(0.5 + confidence / 2.0);

  Summary summary;
  std::map<std::pair<Index, std::string>, std::vector<double>> groups;
  std::vector<std::pair<Index, std::string>> order;

  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  int d_col = -1, method_col = -1, excess_col = -1, status_col = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_line(line);
    if (!header_seen) {
      header_seen = true;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "d") d_col = static_cast<int>(i);
        if (fields[i] == "method") method_col = static_cast<int>(i);
        if (fields[i] == "excess_risk") excess_col = static_cast<int>(i);
        if (fields[i] == "status") status_col = static_cast<int>(i);
      }
      if (d_col < 0 || method_col < 0 || excess_col < 0)
        throw std::runtime_error("summarize: header lacks d/method/excess_risk columns");
      continue;
    }
    const std::size_t need =
        static_cast<std::size_t>(std::max({d_col, method_col, excess_col, status_col})) + 1;
    if (fields.size() < need) {
      summary.parse_errors.push_back("line " + std::to_string(lineno) + ": too few fields");
      continue;
    }
    if (status_col >= 0 && fields[static_cast<std::size_t>(status_col)] != "ok") {
      ++summary.error_rows;
      continue;
    }
    Index d = 0;
    double excess = 0;
    try {
      d = static_cast<Index>(std::stoll(fields[static_cast<std::size_t>(d_col)]));
      excess = std::stod(fields[static_cast<std::size_t>(excess_col)]);
    } catch (const std::exception&) {
      summary.parse_errors.push_back("line " + std::to_string(lineno) + ": non-numeric field");
      continue;
    }
    const auto key = std::make_pair(d, fields[static_cast<std::size_t>(method_col)]);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(excess);
    ++summary.used_rows;
  }

  for (const auto& key : order) {
    const auto& vals = groups[key];
    SummaryRow row;
    row.d = key.first;
    row.method = key.second;
    row.count = static_cast<int>(vals.size());
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    row.mean = mean;
    if (vals.size() > 1) {
      double ss = 0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      row.se = std::sqrt(ss / static_cast<double>(vals.size() - 1) /
                         static_cast<double>(vals.size()));
      row.se_defined = true;
      row.ci_lo = mean - z * row.se;
      row.ci_hi = mean + z * row.se;
    } else {
      row.se = std::numeric_limits<double>::quiet_NaN();
      row.ci_lo = row.ci_hi = mean;
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

void write_summary_csv(const Summary& summary, std::ostream& out) {
  out << "# zimp-summary v1\n";
  out << "d,method,count,mean,se,ci_lo,ci_hi,se_defined\n";
  for (const SummaryRow& r : summary.rows) {
    out << r.d << ',' << r.method << ',' << r.count << ',' << format_double(r.mean) << ','
        << format_double(r.se) << ',' << format_double(r.ci_lo) << ','
        << format_double(r.ci_hi) << ',' << (r.se_defined ? 1 : 0) << '\n';
  }
}

double median_excess(const std::vector<ResultRow>& rows, Index d, const std::string& method) {
  std::vector<double> vals;
  for (const ResultRow& r : rows)
    if (r.d == d && r.method == method && r.status == "ok") vals.push_back(r.excess_risk);
  if (vals.empty()) throw std::runtime_error("median_excess: no ok rows for the requested cell");
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size() / 2;
  return vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
}

}  // namespace zimp
