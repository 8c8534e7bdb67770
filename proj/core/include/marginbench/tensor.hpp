#pragma once

#include <cstddef>
#include <vector>

namespace marginbench {

// Dense row-major array of doubles, rank 1 or 2. Shapes are explicit and
// nothing broadcasts: every mismatch throws DimensionError.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t dim) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// out[i] = sum_j w[i,j] * v[j]
Tensor matvec(const Tensor& w, const Tensor& v);

// Max-shifted softmax: sums to 1 and never overflows for finite input.
Tensor softmax(const Tensor& z);

// Elementwise -1/0/+1 with sign(0) = 0.
Tensor sign(const Tensor& v);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// a += s * b
void axpy(Tensor& a, double s, const Tensor& b);

double dot(const Tensor& a, const Tensor& b);
double norm_l2(const Tensor& a);
double norm_linf(const Tensor& a);

// Ties resolve to the lowest index.
std::size_t argmax(const Tensor& v);

}  // namespace marginbench
