#include "marginbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marginbench/errors.hpp"

namespace marginbench {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty() || shape_.size() > 2) {
    throw DimensionError("tensor rank must be 1 or 2");
  }
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape product " +
                         std::to_string(shape_product(shape_)));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> values) {
  std::vector<std::size_t> shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::extent(std::size_t dim) const {
  if (dim >= shape_.size()) throw DimensionError("extent index out of range");
  return shape_[dim];
}

double& Tensor::at(std::size_t row, std::size_t col) {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor");
  return data_[row * shape_[1] + col];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor");
  return data_[row * shape_[1] + col];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matvec(const Tensor& w, const Tensor& v) {
  if (w.rank() != 2 || v.rank() != 1 || w.extent(1) != v.size()) {
    throw DimensionError("matvec shapes do not conform");
  }
  std::size_t rows = w.extent(0);
  std::size_t cols = w.extent(1);
  Tensor out = Tensor::zeros({rows});
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = wd + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Tensor softmax(const Tensor& z) {
  if (z.rank() != 1 || z.size() == 0) {
    throw DimensionError("softmax needs a non-empty rank-1 tensor");
  }
  double zmax = z[0];
  for (std::size_t i = 1; i < z.size(); ++i) zmax = std::max(zmax, z[i]);
  Tensor out = Tensor::zeros({z.size()});
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= sum;
  return out;
}

Tensor sign(const Tensor& v) {
  Tensor out = Tensor::zeros(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("sub: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return out;
}

void axpy(Tensor& a, double s, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("axpy: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

double dot(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("dot: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm_l2(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * a[i];
  return std::sqrt(acc);
}

double norm_linf(const Tensor& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a[i]));
  return best;
}

std::size_t argmax(const Tensor& v) {
  if (v.size() == 0) throw DimensionError("argmax of empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace marginbench
