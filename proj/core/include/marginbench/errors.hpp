#pragma once

#include <stdexcept>

namespace marginbench {

// Shape or rank disagreement between operands.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Class index outside [0, K).
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Broken operation precondition (t == y, eps <= 0, bad enum value, ...).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed model/dataset/report file; the message names the offending
// field or row.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure; the message carries the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Enumeration request larger than the configured budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace marginbench
