#pragma once

#include <string>

#include "zimp/common.hpp"
#include "zimp/dataset.hpp"

namespace zimp {

// Dataset CSV with header x_0..x_{d-1},y,p_0..p_{d-1}; values are written
// with round-trip precision.
void write_dataset_csv(const Dataset& ds, const std::string& path);

struct RawDataset {
  Matrix X;
  Vector y;
  Matrix P;
};

// Reads the schema above; throws with the offending line number on
// malformed input.
RawDataset read_dataset_csv(const std::string& path);

// Round-trip double formatting shared by every CSV writer.
std::string format_double(double v);

}  // namespace zimp
