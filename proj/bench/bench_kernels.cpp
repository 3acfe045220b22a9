// Compares serial and OpenMP execution of the deterministic kernels and
// checks that both produce identical output.

#include <chrono>
#include <cstdio>
#include <string>

#include "zimp/dataset.hpp"
#include "zimp/harness.hpp"
#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/parallel.hpp"

using namespace zimp;

namespace {

template <class Fn>
double time_ms(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %4.2fx   %s\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "outputs identical" : "OUTPUTS DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) set_max_threads(std::stoi(argv[1]));
  std::printf("workers: %d\n", max_threads());

  {
    LinearProblem p = build_lowrank_problem(50, 5, Vector::Ones(5), Vector::Zero(50), 2.0, 1);
    MaskModel mask = MaskModel::ho_mcar(50, 0.5);
    Dataset a, b;
    const double ts = time_ms([&] { a = sample_dataset(p, mask, 200000, 7, ExecMode::serial); });
    const double tp = time_ms([&] { b = sample_dataset(p, mask, 200000, 7, ExecMode::parallel); });
    report("sample_dataset 200k x 50", ts, tp,
           (a.X - b.X).cwiseAbs().maxCoeff() == 0.0 && (a.y - b.y).cwiseAbs().maxCoeff() == 0.0 &&
               (a.P - b.P).cwiseAbs().maxCoeff() == 0.0);
  }

  {
    LinearProblem p = build_lowrank_problem(30, 4, Vector::Ones(4), Vector::Zero(30), 0.5, 2);
    MaskModel mask = MaskModel::without_replacement(30, 15);
    MaskStats a, b;
    const double ts = time_ms([&] { a = mc_mask_stats(mask, p, 1000000, 9, 1.0, ExecMode::serial); });
    const double tp =
        time_ms([&] { b = mc_mask_stats(mask, p, 1000000, 9, 1.0, ExecMode::parallel); });
    report("mc_mask_stats 1M x 30", ts, tp,
           (a.V - b.V).cwiseAbs().maxCoeff() == 0.0 && (a.rho - b.rho).cwiseAbs().maxCoeff() == 0.0);
  }

  {
    LinearProblem p = build_lowrank_problem(100, 5, Vector::Ones(5), Vector::Zero(100), 2.0, 3);
    MaskModel mask = MaskModel::ho_mcar(100, 0.5);
    Vector theta = Vector::Constant(100, 0.1);
    McEstimate a, b;
    const double ts =
        time_ms([&] { a = mc_imputed_risk(p, mask, theta, 1000000, 11, ExecMode::serial); });
    const double tp =
        time_ms([&] { b = mc_imputed_risk(p, mask, theta, 1000000, 11, ExecMode::parallel); });
    report("mc_imputed_risk 1M x 100", ts, tp, a.value == b.value && a.se == b.se);
  }

  {
    ExperimentSpec spec;
    spec.model_kind = "low-rank";
    spec.mask_kind = "ho-mcar";
    spec.d_grid = {10, 30, 100};
    spec.n = 500;
    spec.r = 5;
    spec.repetitions = 4;
    spec.test_size = 2000;
    spec.methods = {"zero+sgd", "zero+ridge-loo", "pattern"};
    spec.master_seed = 17;
    std::string a, b;
    const double ts = time_ms([&] { a = results_csv(run_experiment(spec, ExecMode::serial), false); });
    const double tp =
        time_ms([&] { b = results_csv(run_experiment(spec, ExecMode::parallel), false); });
    report("experiment sweep 36 cells", ts, tp, a == b);
  }
  return 0;
}
