#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zimp/parallel.hpp"

namespace zimp {

struct PropertyCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  double margin = 0;  // smallest slack observed; >= 0 means pass
  std::string detail;
};

struct VerifyOptions {
  int seeds = 20;
  // Scales every numeric tolerance. 0 turns the identity checks into exact
  // floating-point comparisons, a negative control that must fail.
  double eps_scale = 1.0;
  std::uint64_t master_seed = 0x7a11ced5eedULL;
  std::int64_t mc_draws = 1000000;
  ExecMode mode = ExecMode::parallel;
};

// suite: "theory", "masking", "regress" or "all".
std::vector<PropertyCheck> run_verification(const std::string& suite,
                                            const VerifyOptions& opts);

bool all_pass(const std::vector<PropertyCheck>& checks);

}  // namespace zimp
