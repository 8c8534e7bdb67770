#pragma once

#include <cstddef>
#include <functional>

#include "marginbench/attacks.hpp"
#include "marginbench/nnet.hpp"
#include "marginbench/tensor.hpp"

namespace marginbench {

// Axis-aligned enumeration grid over the eps-ball around center. An odd
// points_per_axis keeps the center itself on the grid.
struct GridSpec {
  int points_per_axis = 0;
  double eps = 0.0;
  Tensor center;
};

struct GridResult {
  Tensor x_star;
  double margin = 0.0;
};

// Exhaustive minimum of margin_value over grid points inside [0,1]^n.
// Refuses more than 4 dims or more than 10^7 points. Ties resolve to the
// lexicographically smallest index vector.
GridResult grid_min_margin(const Classifier& model, const GridSpec& grid, std::size_t y);

struct LinearMarginResult {
  double margin = 0.0;
  std::size_t target = 0;
};

// Closed-form minimum margin of the affine classifier z = Wx + b over the
// eps-ball, ignoring the [0,1] box (callers keep x at least eps away from
// the box boundary). Target ties resolve to the lowest index.
LinearMarginResult linear_min_margin(const Tensor& w, const Tensor& b, const Tensor& x,
                                     std::size_t y, double eps, Norm norm);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                   double h = 1e-5);

}  // namespace marginbench
