#pragma once

#include <optional>

#include "nmatch/geometry.hpp"
#include "nmatch/matcher.hpp"
#include "nmatch/metrics.hpp"
#include "nmatch/tensor.hpp"
#include "nmatch/weights.hpp"

namespace nmatch {

// Map pixel matches to an [N,4] coordinate tensor normalized by the camera
// intrinsics when available, otherwise by half-extent (principal point at the
// image center, focal = max(W,H)/2).
Tensor normalize_matches(const PixelMatchSet& matches, int width, int height,
                         const std::optional<Mat3>& intrinsics);

// Per-channel standardization over the correspondence set:
// (x - mean) / (std + 1e-3). Requires N >= 2.
Tensor context_norm(const Tensor& features);

// Permutation-equivariant correspondence classifier: pointwise 4->128 lift,
// 12 residual blocks of two (linear -> context_norm -> ReLU) stages, and a
// 128->1 head. Inlier weight w = tanh(ReLU(logit)).
class OutlierNet {
 public:
  explicit OutlierNet(ParamStore& params);

  Tensor logits(const Tensor& coords) const;   // [N]
  Tensor weights(const Tensor& coords) const;  // [N], in [0,1)

  static constexpr double kInlierThreshold = 0.5;

 private:
  ParamStore& params_;
};

// Essential matrix from the weighted 8-point system: the smallest-eigenvalue
// eigenvector of X = sum_i w_i z_i z_i^T, unit Frobenius norm, first nonzero
// entry positive. Differentiable in w. coords rows are (u,v,u',v') in
// normalized camera coordinates. Throws std::domain_error when fewer than 8
// rows carry positive weight.
Tensor weighted_eight_point(const Tensor& coords, const Tensor& w);

Mat3 to_mat3(const Tensor& e);

struct ConsensusResult {
  std::vector<char> inliers;
  Mat3 model;
};

// Homography sample-consensus baseline over pixel matches.
ConsensusResult consensus_baseline(const PixelMatchSet& matches, int iterations,
                                   double inlier_tol_px, uint64_t seed = 0);

}  // namespace nmatch
