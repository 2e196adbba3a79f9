#include "nmatch/outlier.hpp"

#include <cmath>
#include <stdexcept>

#include "nmatch/eigen.hpp"

namespace nmatch {

Tensor normalize_matches(const PixelMatchSet& matches, int width, int height,
                         const std::optional<Mat3>& intrinsics) {
  int n = static_cast<int>(matches.entries.size());
  Mat3 k_inv;
  if (intrinsics) {
    k_inv = intrinsics->inverse();
  } else {
    Mat3 k = Mat3::identity();
    double f = std::max(width, height) / 2.0;
    k(0, 0) = k(1, 1) = f;
    k(0, 2) = width / 2.0;
    k(1, 2) = height / 2.0;
    k_inv = k.inverse();
  }
  Tensor coords({n, 4});
  for (int i = 0; i < n; ++i) {
    const auto& m = matches.entries[i];
    Vec2 a = k_inv.apply({m.uA, m.vA});
    Vec2 b = k_inv.apply({m.uB, m.vB});
    coords.data()[i * 4 + 0] = a.x;
    coords.data()[i * 4 + 1] = a.y;
    coords.data()[i * 4 + 2] = b.x;
    coords.data()[i * 4 + 3] = b.y;
  }
  return coords;
}

Tensor context_norm(const Tensor& x) {
  if (x.rank() != 2 || x.extent(0) < 2)
    throw std::domain_error("context_norm needs an [N>=2, C] tensor");
  auto mu = col_mean(x);
  auto centered = sub_cols(x, mu);
  auto var = col_mean(square(centered));
  auto denom = add_scalar(sqrt(var), 1e-3);
  return div_cols(centered, denom);
}

OutlierNet::OutlierNet(ParamStore& params) : params_(params) {
  params_.create("outlier.lift.w", {4, 128}, 4, 128);
  params_.create_zeros("outlier.lift.b", {128});
  for (int blk = 0; blk < 12; ++blk) {
    std::string tag = "outlier.block" + std::to_string(blk);
    for (const char* stage : {".l1", ".l2"}) {
      params_.create(tag + stage + ".w", {128, 128}, 128, 128);
      params_.create_zeros(tag + stage + ".b", {128});
    }
  }
  params_.create("outlier.head.w", {128, 1}, 128, 1);
  params_.create_zeros("outlier.head.b", {1});
}

Tensor OutlierNet::logits(const Tensor& coords) const {
  if (coords.rank() != 2 || coords.extent(1) != 4)
    throw std::invalid_argument("classifier expects [N,4] coordinates");
  int n = coords.extent(0);
  auto x = add_cols(matmul(coords, params_.get("outlier.lift.w")),
                    params_.get("outlier.lift.b"));
  for (int blk = 0; blk < 12; ++blk) {
    std::string tag = "outlier.block" + std::to_string(blk);
    auto t = relu(context_norm(
        add_cols(matmul(x, params_.get(tag + ".l1.w")),
                 params_.get(tag + ".l1.b"))));
    auto t2 = relu(context_norm(
        add_cols(matmul(t, params_.get(tag + ".l2.w")),
                 params_.get(tag + ".l2.b"))));
    x = add(x, t2);
  }
  auto y = add_cols(matmul(x, params_.get("outlier.head.w")),
                    params_.get("outlier.head.b"));
  return reshape(y, {n});
}

Tensor OutlierNet::weights(const Tensor& coords) const {
  return tanh(relu(logits(coords)));
}

Tensor weighted_eight_point(const Tensor& coords, const Tensor& w) {
  if (coords.rank() != 2 || coords.extent(1) != 4)
    throw std::invalid_argument("expected [N,4] normalized coordinates");
  int n = coords.extent(0);
  if (w.rank() != 1 || w.size() != n)
    throw std::invalid_argument("weight vector length mismatch");
  int positive = 0;
  for (double v : w.data())
    if (v > 0) ++positive;
  if (positive < 8)
    throw std::domain_error(
        "weighted 8-point needs at least 8 positively weighted matches");

  // epipolar constraint rows z: p' = (u',v',1) outer p = (u,v,1), flattened
  Tensor z({n, 9});
  for (int i = 0; i < n; ++i) {
    double u = coords.data()[i * 4 + 0], v = coords.data()[i * 4 + 1];
    double up = coords.data()[i * 4 + 2], vp = coords.data()[i * 4 + 3];
    double p[3] = {u, v, 1.0};
    double pp[3] = {up, vp, 1.0};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) z.data()[i * 9 + 3 * r + c] = pp[r] * p[c];
  }
  auto x = matmul(transpose(z), mul_rows(z, w));
  return reshape(smallest_eigvec(x), {3, 3});
}

Mat3 to_mat3(const Tensor& e) {
  if (e.size() != 9) throw std::invalid_argument("expected 9 entries");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.m[i] = e.data()[i];
  return m;
}

ConsensusResult consensus_baseline(const PixelMatchSet& matches, int iterations,
                                   double inlier_tol_px, uint64_t seed) {
  if (matches.entries.size() < 4)
    throw std::domain_error("consensus needs at least 4 matches");
  auto est = estimate_homography(matches, seed, inlier_tol_px, iterations);
  return {est.inliers, est.h};
}

}  // namespace nmatch
