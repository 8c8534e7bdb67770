#include "marginbench/oracle.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "marginbench/errors.hpp"
#include "marginbench/losses.hpp"

namespace marginbench {

GridResult grid_min_margin(const Classifier& model, const GridSpec& grid, std::size_t y) {
  const Tensor& c = grid.center;
  const std::size_t n = c.size();
  if (c.rank() != 1 || n == 0 || model.input_dim() != n) {
    throw DimensionError("grid_min_margin: center does not match the model input");
  }
  if (y >= model.class_count()) throw IndexError("grid_min_margin: label out of range");
  if (grid.eps <= 0.0) throw UsageError("grid_min_margin: eps must be > 0");
  const int g = grid.points_per_axis;
  if (g < 3 || g % 2 == 0) {
    throw UsageError("grid_min_margin: points_per_axis must be odd and >= 3");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (c[i] < 0.0 || c[i] > 1.0) throw UsageError("grid_min_margin: center outside [0,1]");
  }
  if (n > 4) throw BudgetError("grid_min_margin: enumeration limited to 4 dims");
  double total = std::pow(static_cast<double>(g), static_cast<double>(n));
  if (total > 1e7) {
    throw BudgetError("grid_min_margin: " + std::to_string(static_cast<long>(total)) +
                      " points exceed the 1e7 budget");
  }

  const double step = 2.0 * grid.eps / (g - 1);
  std::vector<int> idx(n, 0);
  Tensor point = Tensor::zeros({n});
  GridResult best;
  best.margin = std::numeric_limits<double>::infinity();

  // Lexicographic scan with idx[0] most significant; strict improvement keeps
  // the lexicographically smallest minimizer.
  while (true) {
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
      point[i] = c[i] - grid.eps + step * idx[i];
      if (point[i] < 0.0 || point[i] > 1.0) {
        inside = false;
        break;
      }
    }
    if (inside) {
      double m = margin_value(forward(model, point), y);
      if (m < best.margin) {
        best.margin = m;
        best.x_star = point;
      }
    }
    std::size_t d = n;
    while (d > 0) {
      if (++idx[d - 1] < g) break;
      idx[d - 1] = 0;
      --d;
    }
    if (d == 0) break;
  }
  return best;
}

LinearMarginResult linear_min_margin(const Tensor& w, const Tensor& b, const Tensor& x,
                                     std::size_t y, double eps, Norm norm) {
  if (w.rank() != 2 || b.rank() != 1 || x.rank() != 1 || w.extent(0) != b.size() ||
      w.extent(1) != x.size()) {
    throw DimensionError("linear_min_margin: shapes do not conform");
  }
  const std::size_t classes = w.extent(0);
  const std::size_t n = x.size();
  if (classes < 2) throw DimensionError("linear_min_margin: needs K >= 2");
  if (y >= classes) throw IndexError("linear_min_margin: label out of range");
  if (eps < 0.0) throw UsageError("linear_min_margin: eps must be >= 0");

  LinearMarginResult best;
  best.margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < classes; ++t) {
    if (t == y) continue;
    double margin = b[y] - b[t];
    double pen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = w.at(y, i) - w.at(t, i);
      margin += d * x[i];
      pen += norm == Norm::linf ? std::abs(d) : d * d;
    }
    if (norm == Norm::l2) pen = std::sqrt(pen);
    margin -= eps * pen;
    if (margin < best.margin) {
      best.margin = margin;
      best.target = t;
    }
  }
  return best;
}

Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  if (h <= 0.0) throw UsageError("fd_gradient: h must be > 0");
  Tensor g = Tensor::zeros(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    double hi = f(probe);
    probe[i] = x[i] - h;
    double lo = f(probe);
    probe[i] = x[i];
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

}  // namespace marginbench
