#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zimp/common.hpp"
#include "zimp/parallel.hpp"

namespace zimp {

// Methods the sweep understands. "naive" is the constant-zero baseline whose
// excess risk is the signal ||theta*||^2_Sigma.
const std::vector<std::string>& known_methods();

struct ExperimentSpec {
  std::string id;                       // defaults to "<model>-<mask>"
  std::string model_kind = "low-rank";  // low-rank | spiked
  std::string mask_kind = "ho-mcar";    // ho-mcar | self-masking | without-replacement
  std::vector<Index> d_grid = {10, 20, 50, 100, 200, 300, 500};
  Index n = 500;
  Index r = 5;
  double observe_rate = 0.5;  // rho for MCAR, target rate for self-masking
  int repetitions = 10;
  Index test_size = 10000;
  std::vector<std::string> methods = {"zero+sgd", "zero+ridge-loo", "opti",
                                      "ice+sgd", "ice+ridge-loo", "pattern"};
  std::uint64_t master_seed = 0;
  double sigma2 = 2.0;
  double theta_tail_norm = 0.2;  // spiked
  double eta = 1.0;              // spiked residual level
  double alpha_scale = 1.0;      // self-masking slope scale
  int ice_rounds = 10;
  double ice_ridge = 1e-3;
  bool timing = false;  // wall_ms column prints "na" when off

  std::string effective_id() const;
  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string model;
  std::string mask;
  Index d = 0;
  Index n = 0;
  std::string method;
  int repetition = 0;
  std::uint64_t seed = 0;
  double excess_risk = 0;  // test MSE - sigma2
  double std_error = 0;
  double wall_ms = 0;
  std::string status = "ok";  // "ok" or a sanitized error tag
};

// Runs every (d, method, repetition) cell. Cells are independent, seeded by
// mix(master, d, method, repetition), and internally single-threaded; rows
// come back in canonical (d-grid order, method order, repetition) order no
// matter how cells were scheduled. Per-cell failures become rows with an
// error status.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      ExecMode mode = ExecMode::parallel);

// CSV with a versioned header comment. Bodies are byte-identical across runs
// and worker counts when timing is off.
void write_results_csv(const std::vector<ResultRow>& rows, bool timing, std::ostream& out);
std::string results_csv(const std::vector<ResultRow>& rows, bool timing);

struct SummaryRow {
  Index d = 0;
  std::string method;
  int count = 0;
  double mean = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  bool se_defined = false;  // false for a single repetition
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::vector<std::string> parse_errors;  // "line N: reason"
  int used_rows = 0;
  int error_rows = 0;  // rows with a non-ok status, excluded from means
};

// Normal-approximation confidence intervals over repetitions, grouped by
// (d, method).
Summary summarize_results_csv(std::istream& in, double confidence);
void write_summary_csv(const Summary& summary, std::ostream& out);

// Median excess risk per (d, method) over ok rows; handy for trend checks.
double median_excess(const std::vector<ResultRow>& rows, Index d, const std::string& method);

}  // namespace zimp
