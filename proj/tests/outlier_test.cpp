#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nmatch/outlier.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/synth.hpp"

using namespace nmatch;

namespace {

Tensor coords_from(const CorrespondenceSet& set) {
  Tensor t({static_cast<int>(set.points.size()), 4});
  for (size_t i = 0; i < set.points.size(); ++i)
    for (int c = 0; c < 4; ++c) t.data()[i * 4 + c] = set.points[i][c];
  return t;
}

double epipolar_residual(const Mat3& e, const std::array<double, 4>& p) {
  double r0 = e(0, 0) * p[0] + e(0, 1) * p[1] + e(0, 2);
  double r1 = e(1, 0) * p[0] + e(1, 1) * p[1] + e(1, 2);
  double r2 = e(2, 0) * p[0] + e(2, 1) * p[1] + e(2, 2);
  return std::abs(p[2] * r0 + p[3] * r1 + r2);
}

double unit_sign_distance(const Mat3& a, const Mat3& b_raw) {
  Mat3 b = b_raw;
  double n = b.frobenius();
  for (auto& v : b.m) v /= n;
  double dp = 0, dm = 0;
  for (int k = 0; k < 9; ++k) {
    dp += (a.m[k] - b.m[k]) * (a.m[k] - b.m[k]);
    dm += (a.m[k] + b.m[k]) * (a.m[k] + b.m[k]);
  }
  return std::sqrt(std::min(dp, dm));
}

}  // namespace

TEST_CASE("context normalization closed forms") {
  Tensor same({3, 2}, {1, 4, 1, 4, 1, 4});
  auto z = context_norm(same);
  for (double v : z.data()) CHECK(v == doctest::Approx(0.0));

  Tensor two({2, 1}, {0, 2});
  auto n = context_norm(two);
  CHECK(std::abs(n.data()[0] + 1.0) < 1e-2);
  CHECK(std::abs(n.data()[1] - 1.0) < 1e-2);

  Tensor single({1, 2}, {1, 2});
  CHECK_THROWS_AS(context_norm(single), std::domain_error);
}

TEST_CASE("context normalization is permutation equivariant") {
  Rng rng(1, "test");
  Tensor x({6, 3});
  for (auto& v : x.data()) v = rng.uniform(-2, 2);
  auto base = context_norm(x);
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Tensor shuffled({6, 3});
  for (int i = 0; i < 6; ++i)
    for (int c = 0; c < 3; ++c)
      shuffled.data()[i * 3 + c] = x.data()[perm[i] * 3 + c];
  auto permuted = context_norm(shuffled);
  for (int i = 0; i < 6; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(permuted.data()[i * 3 + c] ==
            doctest::Approx(base.data()[perm[i] * 3 + c]).epsilon(1e-12));
}

TEST_CASE("inlier weights are tanh of rectified logits") {
  // functional identity on the emitted weights; and the range property
  ParamStore params(2);
  OutlierNet net(params);
  auto set = generate_correspondences(2, 32, 0.5);
  auto coords = coords_from(set);
  NoGradGuard ng;
  auto y = net.logits(coords);
  auto w = net.weights(coords);
  for (int i = 0; i < 32; ++i) {
    double expect = std::tanh(std::max(0.0, y.data()[i]));
    CHECK(w.data()[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(w.data()[i] >= 0.0);
    CHECK(w.data()[i] < 1.0);
  }
  CHECK(std::tanh(std::max(0.0, 0.0)) == 0.0);
  CHECK(std::tanh(std::max(0.0, 10.0)) == doctest::Approx(0.9999999959));
}

TEST_CASE("classifier is permutation equivariant bitwise") {
  ParamStore params(3);
  OutlierNet net(params);
  Rng rng(3, "test");
  NoGradGuard ng;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 16;
    auto set = generate_correspondences(100 + trial, n, 0.5);
    auto coords = coords_from(set);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(i + 1)]);
    Tensor shuffled({n, 4});
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 4; ++c)
        shuffled.data()[i * 4 + c] = coords.data()[perm[i] * 4 + c];
    // raw logits, not tanh(relu(.)): the rectifier maps most random-init
    // outputs to exact zero, which would make the bitwise check vacuous
    auto base = net.logits(coords);
    auto permuted = net.logits(shuffled);
    for (int i = 0; i < n; ++i)
      CHECK(permuted.data()[i] == base.data()[perm[i]]);
  }
}

TEST_CASE("weighted 8-point recovers the synthetic essential matrix") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto set = generate_correspondences(seed, 20, 1.0, 0.0);
    auto coords = coords_from(set);
    auto w = Tensor::full({20}, 1.0);
    NoGradGuard ng;
    auto e = weighted_eight_point(coords, w);
    Mat3 em = to_mat3(e);
    for (const auto& p : set.points)
      CHECK(epipolar_residual(em, p) < 1e-8);
    CHECK(unit_sign_distance(em, set.e_gt) < 1e-6);
  }
}

TEST_CASE("zero-weighted outliers are inert") {
  auto set = generate_correspondences(5, 20, 1.0, 0.0);
  auto coords = coords_from(set);
  auto w = Tensor::full({20}, 1.0);
  NoGradGuard ng;
  auto base = weighted_eight_point(coords, w);

  Rng rng(5, "test");
  Tensor extended({40, 4});
  std::copy(coords.data().begin(), coords.data().end(),
            extended.data().begin());
  for (int i = 80; i < 160; ++i) extended.data()[i] = rng.uniform(-1.2, 1.2);
  Tensor wz({40});
  for (int i = 0; i < 20; ++i) wz.data()[i] = 1.0;
  auto masked = weighted_eight_point(extended, wz);
  for (int k = 0; k < 9; ++k)
    CHECK(std::abs(masked.data()[k] - base.data()[k]) < 1e-10);
}

TEST_CASE("weight scaling leaves the estimate unchanged") {
  auto set = generate_correspondences(6, 24, 1.0, 0.5);
  auto coords = coords_from(set);
  NoGradGuard ng;
  auto a = weighted_eight_point(coords, Tensor::full({24}, 1.0));
  auto b = weighted_eight_point(coords, Tensor::full({24}, 2.5));
  for (int k = 0; k < 9; ++k)
    CHECK(std::abs(a.data()[k] - b.data()[k]) < 1e-12);
}

TEST_CASE("degenerate weight patterns are rejected") {
  auto set = generate_correspondences(7, 12, 1.0);
  auto coords = coords_from(set);
  NoGradGuard ng;
  CHECK_THROWS_AS(weighted_eight_point(coords, Tensor::zeros({12})),
                  std::domain_error);
  Tensor seven({12});
  for (int i = 0; i < 7; ++i) seven.data()[i] = 1.0;
  CHECK_THROWS_AS(weighted_eight_point(coords, seven), std::domain_error);

  auto small = generate_correspondences(8, 8, 1.0);
  Tensor c7({7, 4});
  auto cs = coords_from(small);
  std::copy(cs.data().begin(), cs.data().begin() + 28, c7.data().begin());
  CHECK_THROWS_AS(weighted_eight_point(c7, Tensor::full({7}, 1.0)),
                  std::domain_error);
}

TEST_CASE("exact data leaves a vanishing smallest eigenvalue") {
  auto set = generate_correspondences(9, 20, 1.0, 0.0);
  auto coords = coords_from(set);
  NoGradGuard ng;
  // rebuild X and inspect its spectrum through the public estimate:
  // residuals of the recovered matrix bound lambda_min via the quadratic form
  auto e = weighted_eight_point(coords, Tensor::full({20}, 1.0));
  Mat3 em = to_mat3(e);
  double lambda_bound = 0, trace_proxy = 0;
  for (const auto& p : set.points) {
    double r = epipolar_residual(em, p);
    lambda_bound += r * r;
    double z2 = (p[0] * p[0] + p[1] * p[1] + 1) * (p[2] * p[2] + p[3] * p[3] + 1);
    trace_proxy += z2;
  }
  CHECK(lambda_bound < 1e-16 * trace_proxy);
}

TEST_CASE("coordinate normalization modes") {
  PixelMatchSet ms;
  ms.entries.push_back({64, 64, 64, 64, 1, 1, 0});
  ms.entries.push_back({0, 0, 128, 128, 1, 1, 0});
  auto fallback = normalize_matches(ms, 128, 128, std::nullopt);
  // principal point at the center, focal 64: center -> (0,0)
  CHECK(fallback.data()[0] == doctest::Approx(0.0));
  CHECK(fallback.data()[1] == doctest::Approx(0.0));
  CHECK(fallback.data()[4] == doctest::Approx(-1.0));
  CHECK(fallback.data()[6] == doctest::Approx(1.0));
  for (double v : fallback.data()) {
    CHECK(v >= -2.0);
    CHECK(v <= 2.0);
  }

  Mat3 k = Mat3::identity();
  k(0, 0) = k(1, 1) = 32;
  k(0, 2) = k(1, 2) = 64;
  auto with_k = normalize_matches(ms, 128, 128, k);
  CHECK(with_k.data()[4] == doctest::Approx(-2.0));
}

TEST_CASE("consensus baseline filters a contaminated match set") {
  Rng rng(10, "test");
  Mat3 h = Mat3::identity();
  h(0, 2) = 5.0;
  h(1, 2) = -3.0;
  PixelMatchSet ms;
  for (int i = 0; i < 50; ++i) {
    double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
    Vec2 b = h.apply({x, y});
    ms.entries.push_back({x, y, b.x, b.y, 1, 1, 0});
  }
  for (int i = 0; i < 30; ++i)
    ms.entries.push_back({rng.uniform(0, 100), rng.uniform(0, 100),
                          rng.uniform(0, 100), rng.uniform(0, 100), 1, 1, 0});
  auto result = consensus_baseline(ms, 1000, 3.0, 4);
  int true_in = 0, false_in = 0;
  for (int i = 0; i < 80; ++i) {
    if (i < 50 && result.inliers[i]) ++true_in;
    if (i >= 50 && result.inliers[i]) ++false_in;
  }
  CHECK(true_in == 50);
  CHECK(false_in <= 2);

  PixelMatchSet tiny;
  tiny.entries.assign(3, PixelMatch{});
  CHECK_THROWS_AS(consensus_baseline(tiny, 100, 3.0, 1), std::domain_error);
}
