#include <doctest.h>

#include <cmath>

#include "nmatch/optim.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/weights.hpp"

using namespace nmatch;

TEST_CASE("zero gradient leaves parameters unchanged") {
  Tensor p({3}, {1.0, -2.0, 0.5});
  p.set_requires_grad(true);
  Adam opt({p}, 1e-3);
  p.grad();  // allocate zero gradient
  auto before = p.data();
  opt.step();
  CHECK(p.data() == before);
}

TEST_CASE("constant gradient drives parameters against its sign") {
  Tensor p({2}, {0.0, 0.0});
  p.set_requires_grad(true);
  Adam opt({p}, 1e-2);
  for (int i = 0; i < 200; ++i) {
    p.grad()[0] = 1.0;
    p.grad()[1] = -3.0;
    opt.step();
  }
  CHECK(p.data()[0] < -0.5);
  CHECK(p.data()[1] > 0.5);
}

TEST_CASE("training loop is bitwise deterministic") {
  auto run = [] {
    Rng rng(99, "replay");
    Tensor p({4}, {0.1, 0.2, 0.3, 0.4});
    p.set_requires_grad(true);
    Adam opt({p}, 1e-3);
    for (int i = 0; i < 100; ++i) {
      opt.zero_grad();
      auto loss = sum(square(p));
      loss.backward();
      for (auto& g : p.grad()) g += 0.01 * rng.normal();
      opt.step();
    }
    return p.data();
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check on the quadratic") {
  Tensor x({3}, {1, 2, 3});
  auto f = [](const Tensor& t) { return sum(square(t)); };
  CHECK(grad_check(f, x, 1e-5) < 1e-6);
  // sanity: analytic gradient is 2x
  Tensor y({3}, {1, 2, 3});
  y.set_requires_grad(true);
  auto loss = sum(square(y));
  loss.backward();
  CHECK(y.grad()[0] == doctest::Approx(2));
  CHECK(y.grad()[1] == doctest::Approx(4));
  CHECK(y.grad()[2] == doctest::Approx(6));
}

TEST_CASE("grad_check rejects non-scalar objectives") {
  Tensor x({2}, {1, 2});
  auto f = [](const Tensor& t) { return square(t); };
  CHECK_THROWS_AS(grad_check(f, x), std::domain_error);
}

TEST_CASE("grad_check covers common nonlinearities") {
  Rng rng(5, "test");
  Tensor x({6});
  for (auto& v : x.data()) v = rng.uniform(-2, 2);
  auto f = [](const Tensor& t) {
    return sum(mul(elu(t), tanh(relu(add_scalar(t, 0.3)))));
  };
  CHECK(grad_check(f, x) < 1e-4);
}

TEST_CASE("grad_check covers softmax, conv and normalization") {
  Rng rng(13, "test");
  Tensor x({4, 4, 2});
  for (auto& v : x.data()) v = rng.uniform(-1, 1);
  Tensor k({3, 3, 2, 2});
  for (auto& v : k.data()) v = rng.uniform(-0.5, 0.5);
  Tensor gamma = Tensor::full({2}, 1.2);
  Tensor beta = Tensor::full({2}, -0.1);
  auto f = [&](const Tensor& t) {
    auto c = conv2d(t, k, 1, Padding::Same);
    auto n = instance_norm(c, gamma, beta);
    auto u = upsample2x_bilinear(n);
    auto flat = reshape(u, {64, 2});
    return sum(mul(softmax(flat, 1), softmax(flat, 0)));
  };
  CHECK(grad_check(f, x) < 1e-4);
}
