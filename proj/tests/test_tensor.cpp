#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sqltrack/autograd.hpp"
#include "sqltrack/tensor.hpp"

using namespace sqltrack;

TEST_CASE("elementwise ops and shape checking") {
  Tensor a = Tensor::from({1, 2, 3});
  Tensor b = Tensor::from({4, 5, 6});
  CHECK(add(a, b)[1] == 7);
  CHECK(sub(b, a)[2] == 3);
  CHECK(elementwise_mul(a, b)[0] == 4);
  CHECK(dot(a, b) == doctest::Approx(32.0));
  CHECK_THROWS_AS(add(a, Tensor::from({1, 2})), ShapeMismatch);
  CHECK_THROWS_AS(dot(a, Tensor::zeros(4)), ShapeMismatch);
}

TEST_CASE("matvec") {
  Tensor w({2, 3}, {1, 0, 0, 0, 1, 1});
  Tensor x = Tensor::from({3, 4, 5});
  Tensor y = matvec(w, x);
  CHECK(y.size() == 2);
  CHECK(y[0] == 3);
  CHECK(y[1] == 9);
  CHECK_THROWS_AS(matvec(w, Tensor::zeros(2)), ShapeMismatch);
}

TEST_CASE("tanh of the zero vector is zero") {
  Tensor z = tanh(Tensor::zeros(5));
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("softmax is shift invariant and sums to one") {
  for (double c : {-1e6, -3.0, 0.0, 7.5, 1e6}) {
    Tensor s = softmax(Tensor::from({c, c, c}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(7);
    for (auto& x : v) x = rng.uniform(-30, 30);
    Tensor s = softmax(Tensor::from(v));
    double sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i] >= 0.0);
      sum += s[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("dot(a*b, c) == dot(a, b*c) on random vectors") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(9), b(9), c(9);
    for (std::size_t i = 0; i < 9; ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
      c[i] = rng.uniform(-2, 2);
    }
    Tensor ta = Tensor::from(a), tb = Tensor::from(b), tc = Tensor::from(c);
    double lhs = dot(elementwise_mul(ta, tb), tc);
    double rhs = dot(ta, elementwise_mul(tb, tc));
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("sigmoid matches closed form") {
  Tensor s = sigmoid(Tensor::from({0.0, 100.0, -100.0}));
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(s[2] == doctest::Approx(0.0));
}

TEST_CASE("concat") {
  Tensor c = concat(Tensor::from({1, 2}), Tensor::from({3}));
  CHECK(c.size() == 3);
  CHECK(c[2] == 3);
}
