#pragma once

#include <cstddef>
#include <cstdint>

#include "marginbench/nnet.hpp"

namespace marginbench {

struct GradCheckResult {
  std::size_t trials = 0;       // comparisons actually performed
  std::size_t skipped = 0;      // samples rejected near ReLU/permutation kinks
  double max_rel_error = 0.0;   // worst max-norm relative error seen
};

// Compares the analytic input gradient of every loss (ce, cw, untargeted
// dlr where K >= 3, and all margin rescalings) against central finite
// differences on random inputs, resampling points that sit too close to a
// ReLU or sorted-logit kink.
GradCheckResult gradcheck_model(const Classifier& model, std::size_t trials,
                                std::uint64_t seed, double h = 1e-5);

}  // namespace marginbench
