#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "zimp/harness.hpp"
#include "zimp/masking.hpp"
#include "zimp/model.hpp"
#include "zimp/theory.hpp"
#include "zimp/verify.hpp"

namespace zimp {

using json = nlohmann::json;

// Problem section of a config file, e.g.
//   {"kind": "low-rank", "d": 300, "r": 5, "sigma2": 2.0,
//    "normalize": true, "beta": "gaussian", "mu": 0.0}
// kinds: low-rank, spiked, identity, explicit (fields: sigma, theta_star).
LinearProblem problem_from_json(const json& spec, std::uint64_t seed);

// Mask section, e.g. {"kind": "ho-mcar", "rho": 0.5} or
// {"kind": "without-replacement", "missing": 2} or
// {"kind": "block", "block_size": 3, "rho": 0.5} (optional "law": [...]) or
// {"kind": "self-masking", "target": 0.5, "alpha_scale": 1.0}.
// Self-masking is calibrated against `problem`.
MaskModel mask_from_json(const json& spec, const LinearProblem& problem,
                         std::uint64_t seed);

ExperimentSpec experiment_from_json(const json& spec);
json experiment_to_json(const ExperimentSpec& spec);

json theory_report_to_json(const TheoryReport& report);
json mask_stats_to_json(const MaskStats& stats);
json verification_report_to_json(const std::vector<PropertyCheck>& checks);

json load_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace zimp
