#include <cmath>

#include <doctest.h>

#include "marginbench/errors.hpp"
#include "marginbench/rng.hpp"
#include "marginbench/tensor.hpp"
#include "test_util.hpp"

using namespace marginbench;

TEST_CASE("matvec on hand examples") {
  Tensor identity = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor v = Tensor::vector({3, 4});
  Tensor out = matvec(identity, v);
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 4.0);

  Tensor w = Tensor::matrix(2, 2, {1, 2, 3, 4});
  out = matvec(w, Tensor::vector({1, 1}));
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 7.0);

  Tensor zero = Tensor::matrix(1, 2, {0, 0});
  out = matvec(zero, Tensor::vector({5, 6}));
  CHECK(out.size() == 1);
  CHECK(out[0] == 0.0);
}

TEST_CASE("matvec rejects non-conforming shapes") {
  Tensor w = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(matvec(w, Tensor::vector({1, 2})), DimensionError);
  CHECK_THROWS_AS(matvec(Tensor::vector({1, 2}), Tensor::vector({1, 2})), DimensionError);
}

TEST_CASE("matvec is linear on random inputs") {
  Rng rng(stream_key(11, 0, 0));
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 1 + rng.next_u64() % 6;
    std::size_t cols = 1 + rng.next_u64() % 6;
    Tensor w = mbtest::random_matrix(rng, rows, cols, -10.0, 10.0);
    Tensor u = mbtest::random_vector(rng, cols, -10.0, 10.0);
    Tensor v = mbtest::random_vector(rng, cols, -10.0, 10.0);
    double a = rng.uniform(-10.0, 10.0);
    double b = rng.uniform(-10.0, 10.0);

    Tensor combo = add(scale(u, a), scale(v, b));
    Tensor lhs = matvec(w, combo);
    Tensor rhs = add(scale(matvec(w, u), a), scale(matvec(w, v), b));
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      CHECK(mbtest::close(lhs[i], rhs[i], 1e-10));
    }
  }
}

TEST_CASE("softmax on hand examples") {
  Tensor p = softmax(Tensor::vector({0, 0, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));

  p = softmax(Tensor::vector({std::log(2.0), 0.0}));
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  p = softmax(Tensor::vector({1000.0, 0.0}));
  CHECK(p.all_finite());
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(softmax(Tensor::vector({})), DimensionError);
}

TEST_CASE("softmax sums to one and ignores logit shifts") {
  Rng rng(stream_key(12, 0, 0));
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t k = 1 + rng.next_u64() % 10;
    Tensor z = mbtest::random_vector(rng, k, -50.0, 50.0);
    Tensor p = softmax(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += p[i];
    CHECK(mbtest::close(sum, 1.0, 1e-12));

    double c = rng.uniform(-100.0, 100.0);
    Tensor shifted = z;
    for (std::size_t i = 0; i < k; ++i) shifted[i] += c;
    Tensor q = softmax(shifted);
    for (std::size_t i = 0; i < k; ++i) CHECK(mbtest::close(p[i], q[i], 1e-12));

    // order preserved
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (z[i] < z[j]) CHECK(p[i] <= p[j]);
      }
    }
  }
}

TEST_CASE("sign maps to -1/0/+1") {
  Tensor s = sign(Tensor::vector({-2, 0, 3}));
  CHECK(s[0] == -1.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == 1.0);

  s = sign(Tensor::vector({0, 0}));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.0);

  s = sign(Tensor::vector({1e-300, -1e-300}));
  CHECK(s[0] == 1.0);
  CHECK(s[1] == -1.0);
}

TEST_CASE("tensor construction validates shape against data") {
  CHECK_THROWS_AS(Tensor::matrix(2, 2, {1, 2, 3}), DimensionError);
  CHECK_NOTHROW(Tensor::matrix(2, 2, {1, 2, 3, 4}));
}
