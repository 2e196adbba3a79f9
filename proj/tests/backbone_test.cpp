#include <doctest.h>

#include <cmath>

#include "nmatch/backbone.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/synth.hpp"

using namespace nmatch;

TEST_CASE("desk profile shapes: 128x128 -> 16x16x64 and 64x64x32") {
  ParamStore params(1);
  Backbone net(params, {64, 32});
  auto pair = generate_pair(1, 128);
  NoGradGuard ng;
  auto feats = net.extract(pair.imageA);
  CHECK(feats.coarse.shape() == Shape{16, 16, 64});
  CHECK(feats.fine.shape() == Shape{64, 64, 32});
}

TEST_CASE("full-width profile shapes follow the /8 and /2 contract") {
  ParamStore params(2);
  Backbone net(params, {256, 128});
  Image img(64, 64);
  for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = (i % 11) / 11.0;
  NoGradGuard ng;
  auto feats = net.extract(img);
  CHECK(feats.coarse.shape() == Shape{8, 8, 256});
  CHECK(feats.fine.shape() == Shape{32, 32, 128});
}

TEST_CASE("non-multiple-of-8 extents are rejected") {
  ParamStore params(3);
  Backbone net(params, {64, 32});
  Image img(60, 64);
  NoGradGuard ng;
  CHECK_THROWS(net.extract(img));
}

TEST_CASE("constant-zero image yields per-channel constant maps") {
  ParamStore params(4);
  Backbone net(params, {64, 32});
  Image img(64, 64);
  NoGradGuard ng;
  auto feats = net.extract(img);
  for (const Tensor* map : {&feats.coarse, &feats.fine}) {
    int h = map->extent(0), w = map->extent(1), c = map->extent(2);
    for (int ch = 0; ch < c; ++ch) {
      double ref = map->data()[ch];
      for (int p = 1; p < h * w; ++p)
        CHECK(map->data()[p * c + ch] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("extraction is deterministic given weights") {
  ParamStore params(5);
  Backbone net(params, {64, 32});
  auto pair = generate_pair(5, 64);
  NoGradGuard ng;
  auto a = net.extract(pair.imageA);
  auto b = net.extract(pair.imageA);
  CHECK(a.coarse.data() == b.coarse.data());
  CHECK(a.fine.data() == b.fine.data());
}

TEST_CASE("8 pixel shift moves the coarse map by one interior cell") {
  ParamStore params(6);
  Backbone net(params, {64, 32});
  // a compact blob on a zero background, placed so that the activation
  // support never touches the image border in either run; shifting it by 8
  // pixels must shift the coarse response by exactly one cell
  Rng rng(6, "test");
  Image base_img(192, 192), moved_img(192, 192);
  for (int dy = 0; dy < 4; ++dy)
    for (int dx = 0; dx < 4; ++dx) {
      double v = rng.uniform(0.5, 1.0);
      base_img.at(92 + dy, 92 + dx) = v;
      moved_img.at(92 + dy, 100 + dx) = v;
    }
  NoGradGuard ng;
  auto base = net.extract(base_img);
  auto moved = net.extract(moved_img);
  int c = 64, gw = 24;
  for (int i = 8; i <= 14; ++i)
    for (int j = 8; j <= 13; ++j)
      for (int ch = 0; ch < c; ch += 7) {
        double a = base.coarse.data()[(i * gw + j) * c + ch];
        double b = moved.coarse.data()[(i * gw + (j + 1)) * c + ch];
        CHECK(b == doctest::Approx(a).epsilon(1e-9));
      }
}

TEST_CASE("preprocessing preserves shape") {
  ParamStore params(7);
  Backbone net(params, {64, 32});
  Rng rng(7, "test");
  Tensor coarse({6, 5, 64});
  for (auto& v : coarse.data()) v = rng.uniform(-1, 1);
  NoGradGuard ng;
  auto out = net.preprocess(coarse);
  CHECK(out.shape() == coarse.shape());
}

TEST_CASE("preprocessing with identity weights reproduces the input") {
  ParamStore params(8);
  Backbone net(params, {4, 4});
  // zero everything, then build delta depthwise kernels and per-branch
  // channel selectors
  int branch = 0;
  for (int k : {1, 3, 5, 7}) {
    std::string tag = "backbone.fpm.k" + std::to_string(k);
    auto dw = params.get(tag + ".dw");
    std::fill(dw.data().begin(), dw.data().end(), 0.0);
    int center = k / 2;
    for (int c = 0; c < 4; ++c)
      dw.data()[((center * k + center) * 4 + c)] = 1.0;
    auto pw = params.get(tag + ".pw");
    std::fill(pw.data().begin(), pw.data().end(), 0.0);
    pw.data()[branch] = 1.0;  // branch b forwards channel b
    auto b = params.get(tag + ".b");
    std::fill(b.data().begin(), b.data().end(), 0.0);
    ++branch;
  }
  Rng rng(8, "test");
  Tensor coarse({4, 4, 4});
  for (auto& v : coarse.data()) v = rng.uniform(-1, 1);
  NoGradGuard ng;
  auto out = net.preprocess(coarse);
  for (int i = 0; i < out.size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(coarse.data()[i]).epsilon(1e-12));
}

TEST_CASE("preprocessing rejects channel counts not divisible by 4") {
  ParamStore params(9);
  Backbone net(params, {64, 32});
  Tensor bad({4, 4, 66});
  NoGradGuard ng;
  CHECK_THROWS(net.preprocess(bad));
}
