#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "plantxvit/error.hpp"
#include "plantxvit/grad_check.hpp"
#include "plantxvit/ops.hpp"
#include "plantxvit/random.hpp"
#include "plantxvit/tensor.hpp"

using namespace plantxvit;

namespace {

template <typename T>
std::vector<T> values(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return Tensor<double>(std::move(shape), Fill::uniform(lo, hi, seed));
}

}  // namespace

TEST_CASE("tensor_new fills") {
  CHECK(values(Tensor<float>({2, 2})) == std::vector<float>{0, 0, 0, 0});
  CHECK(values(Tensor<float>({3}, Fill::constant(1.5))) == std::vector<float>{1.5f, 1.5f, 1.5f});

  const Tensor<float> a({4}, Fill::uniform(0, 1, 7));
  const Tensor<float> b({4}, Fill::uniform(0, 1, 7));
  CHECK(values(a) == values(b));
  for (float v : a.data()) {
    CHECK(v >= 0.0f);
    CHECK(v < 1.0f);
  }
  CHECK(values(Tensor<float>({4}, Fill::uniform(0, 1, 8))) != values(a));

  const Tensor<float> he({1000}, Fill::he_uniform(6, 3));
  for (float v : he.data()) CHECK(std::abs(v) <= 1.0f);
}

TEST_CASE("tensor_new rejects bad shapes") {
  CHECK_THROWS_AS(Tensor<float>(Shape{}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 0}), ShapeError);
  const std::size_t huge = std::numeric_limits<std::size_t>::max() / 2;
  CHECK_THROWS_AS(checked_numel({huge, 4}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>({2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST_CASE("matmul") {
  const Tensor<double> eye({2, 2}, {1, 0, 0, 1});
  const Tensor<double> m({2, 2}, {5, 6, 7, 8});
  CHECK(values(matmul(eye, m)) == std::vector<double>{5, 6, 7, 8});
  const Tensor<double> a({2, 2}, {1, 2, 3, 4});
  CHECK(values(matmul(a, m)) == std::vector<double>{19, 22, 43, 50});
  CHECK(matmul(Tensor<float>({2, 3}), Tensor<float>({3, 4})).shape() == Shape{2, 4});
  CHECK_THROWS_AS(matmul(Tensor<float>({2, 3}), Tensor<float>({2, 3})), ShapeError);
}

TEST_CASE("softmax") {
  CHECK(values(softmax(Tensor<double>({2}, {0, 0}), 0)) == std::vector<double>{0.5, 0.5});
  const auto s = softmax(Tensor<double>({3}, {1, 2, 3}), 0);
  // e^x / sum e^x evaluated with 30-digit arithmetic.
  CHECK(s[0] == doctest::Approx(0.0900305731703804580).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.2447284710547976525).epsilon(1e-12));
  CHECK(s[2] == doctest::Approx(0.6652409557748218895).epsilon(1e-12));
  const auto big = softmax(Tensor<float>({2}, {1000, 1000}), 0);
  CHECK(values(big) == std::vector<float>{0.5f, 0.5f});

  // Slices along a middle axis.
  const auto x = random_tensor({3, 4, 5}, 11, -50, 50);
  const auto y = softmax(x, 1);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t i = 0; i < 5; ++i) {
      double total = 0;
      for (std::size_t l = 0; l < 4; ++l) total += y[(o * 4 + l) * 5 + i];
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("softmax slices sum to one for arbitrary finite input") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(16), m = 1 + rng.below(16);
    std::vector<float> v(n * m);
    for (float& e : v) e = static_cast<float>(rng.uniform(-1e4, 1e4));
    const auto y = softmax(Tensor<float>({n, m}, v), 1);
    for (std::size_t r = 0; r < n; ++r) {
      double total = 0;
      for (std::size_t c = 0; c < m; ++c) {
        CHECK(std::isfinite(y[r * m + c]));
        total += y[r * m + c];
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("gelu uses the exact erf form") {
  const auto y = gelu(Tensor<double>({3}, {0, 1, -10}));
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(0.841344746068542949).epsilon(1e-12));
  CHECK(std::abs(y[2]) < 1e-8);
}

TEST_CASE("layer_norm") {
  const Tensor<double> one({2}, Fill::constant(1));
  const Tensor<double> zero({2});
  CHECK(values(layer_norm(Tensor<double>({1, 2}, {1, 3}), one, zero, 0.0)) ==
        std::vector<double>{-1, 1});
  const auto flat = layer_norm(Tensor<double>({1, 2}, {4, 4}), one, zero);
  CHECK(values(flat) == std::vector<double>{0, 0});
  const auto collapsed =
      layer_norm(random_tensor({3, 2}, 1), zero, Tensor<double>({2}, Fill::constant(5)));
  for (double v : collapsed.data()) CHECK(v == 5.0);
  CHECK_THROWS_AS(layer_norm(Tensor<double>({2, 3}), one, zero), ShapeError);

  const auto x = random_tensor({4, 16}, 5, -3, 7);
  const auto y = layer_norm(x, Tensor<double>({16}, Fill::constant(1)), Tensor<double>({16}));
  for (std::size_t r = 0; r < 4; ++r) {
    double mu = 0, var = 0;
    for (std::size_t i = 0; i < 16; ++i) mu += y[r * 16 + i];
    mu /= 16;
    for (std::size_t i = 0; i < 16; ++i) var += (y[r * 16 + i] - mu) * (y[r * 16 + i] - mu);
    var /= 16;
    CHECK(std::abs(mu) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("relu and its subgradient") {
  CHECK(values(relu(Tensor<float>({2}, {-1, 2}))) == std::vector<float>{0, 2});
  CHECK(values(relu(Tensor<float>({3}, {-1, -2, -3}))) == std::vector<float>{0, 0, 0});
  Tape<double> tape;
  const auto x = tape.watch(Tensor<double>({3}, {2, -2, 0}));
  const auto g = tape.backward(sum(relu(x))).of(x);
  CHECK(values(g) == std::vector<double>{1, 0, 0});
}

TEST_CASE("backward") {
  SUBCASE("linearity of sum") {
    Tape<double> tape;
    const auto x = tape.watch(Tensor<double>({3}, {4, 5, 6}));
    CHECK(values(tape.backward(sum(x)).of(x)) == std::vector<double>{1, 1, 1});
  }
  SUBCASE("square") {
    Tape<double> tape;
    const auto x = tape.watch(Tensor<double>({2}, {1, 2}));
    CHECK(values(tape.backward(sum(mul(x, x))).of(x)) == std::vector<double>{2, 4});
  }
  SUBCASE("fan-out accumulates") {
    Tape<double> tape;
    const auto x = tape.watch(Tensor<double>({3}, {1, 2, 3}));
    CHECK(values(tape.backward(sum(add(x, x))).of(x)) == std::vector<double>{2, 2, 2});
  }
  SUBCASE("errors") {
    Tape<double> tape;
    const auto x = tape.watch(Tensor<double>({3}, {1, 2, 3}));
    CHECK_THROWS_AS(tape.backward(relu(x)), GradientError);
    CHECK_THROWS_AS(tape.backward(sum(Tensor<double>({2}))), GradientError);
    Tape<double> other;
    CHECK_THROWS_AS(other.backward(sum(x)), GradientError);
    const auto y = other.watch(Tensor<double>({3}));
    CHECK_THROWS_AS(add(x, y), GradientError);
  }
  SUBCASE("unreached leaf gets zeros") {
    Tape<double> tape;
    const auto x = tape.watch(Tensor<double>({2}, {1, 2}));
    const auto unused = tape.watch(Tensor<double>({2}, {1, 2}));
    const auto grads = tape.backward(sum(x));
    CHECK_FALSE(grads.reached(unused));
    CHECK(values(grads.of(unused)) == std::vector<double>{0, 0});
  }
}

TEST_CASE("replaying the tape is bit-identical") {
  Tape<float> tape;
  const auto x = tape.watch(Tensor<float>({4, 6}, Fill::uniform(-1, 1, 3)));
  const auto w = tape.watch(Tensor<float>({6, 5}, Fill::uniform(-1, 1, 4)));
  const auto root = sum(gelu(softmax(matmul(x, w), 1)));
  const auto g1 = tape.backward(root);
  const auto g2 = tape.backward(root);
  CHECK(values(g1.of(x)) == values(g2.of(x)));
  CHECK(values(g1.of(w)) == values(g2.of(w)));
}

TEST_CASE("backward over independent graphs is additive") {
  const auto a0 = random_tensor({3, 4}, 21);
  const auto b0 = random_tensor({4, 2}, 22);
  auto first = [](const Tensor<double>& a, const Tensor<double>& b) {
    return sum(gelu(matmul(a, b)));
  };
  auto second = [](const Tensor<double>& a) { return sum(mul(a, a)); };

  Tape<double> joint;
  const auto a = joint.watch(a0);
  const auto b = joint.watch(b0);
  const auto gj = joint.backward(add(first(a, b), second(a)));

  Tape<double> t1, t2;
  const auto a1 = t1.watch(a0);
  const auto b1 = t1.watch(b0);
  const auto g1 = t1.backward(first(a1, b1));
  const auto a2 = t2.watch(a0);
  const auto g2 = t2.backward(second(a2));

  const auto ga = gj.of(a);
  const auto ga1 = g1.of(a1);
  const auto ga2 = g2.of(a2);
  for (std::size_t i = 0; i < ga.numel(); ++i) CHECK(ga[i] == doctest::Approx(ga1[i] + ga2[i]));
  CHECK(values(gj.of(b)) == values(g1.of(b1)));
}

TEST_CASE("grad_check on core ops") {
  auto check = [](auto op, std::vector<Tensor<double>> inputs) {
    const auto r64 = grad_check(op, inputs, kGradCheckStep, Precision::kFloat64);
    CHECK(r64.max_relative_error < 1e-6);
    const auto r32 = grad_check(op, inputs, kGradCheckStep, Precision::kFloat32);
    CHECK(r32.max_relative_error < 1e-4);
  };
  check([](const auto& in) { return matmul(in[0], in[1]); },
        {random_tensor({3, 3}, 1), random_tensor({3, 3}, 2)});
  check([](const auto& in) { return softmax(in[0], 0); }, {random_tensor({5}, 3)});
  check([](const auto& in) { return gelu(in[0]); }, {Tensor<double>({3}, {-2, 0.5, 2})});
  check([](const auto& in) { return layer_norm(in[0], in[1], in[2]); },
        {random_tensor({3, 6}, 4, -2, 2), random_tensor({6}, 5), random_tensor({6}, 6)});
  check([](const auto& in) { return batch_matmul(in[0], in[1], true); },
        {random_tensor({2, 3, 4}, 7), random_tensor({2, 5, 4}, 8)});
  check([](const auto& in) { return batch_matmul(in[0], in[1]); },
        {random_tensor({2, 3, 4}, 9), random_tensor({2, 4, 5}, 10)});
  check([](const auto& in) { return add_trailing(in[0], in[1]); },
        {random_tensor({2, 3, 4}, 11), random_tensor({3, 4}, 12)});
  check([](const auto& in) { return mean_axis(in[0], 1); }, {random_tensor({2, 3, 4}, 13)});
  check([](const auto& in) { return concat_last(std::vector{in[0], slice_last(in[1], 1, 3)}); },
        {random_tensor({2, 3}, 14), random_tensor({2, 4}, 15)});
  check([](const auto& in) { return log(in[0]); }, {random_tensor({4}, 16, 0.5, 2)});
}

TEST_CASE("ops are deterministic") {
  auto run = [] {
    const Tensor<float> x({8, 8}, Fill::uniform(-1, 1, 42));
    const Tensor<float> w({8, 8}, Fill::he_uniform(8, 43));
    return values(layer_norm(gelu(matmul(x, w)), Tensor<float>({8}, Fill::constant(1)),
                             Tensor<float>({8})));
  };
  CHECK(run() == run());
}
