#pragma once

#include <array>
#include <vector>

#include "nmatch/geometry.hpp"
#include "nmatch/tensor.hpp"

namespace nmatch {

// Mean binary cross-entropy between predicted and 0/1 ground-truth
// confidences over every grid-pair cell. Predictions are clamped to
// [1e-6, 1-1e-6] before the logs.
Tensor coarse_loss(const Tensor& p, const Tensor& p_gt);

// Fine-level supervision target: T(xA) - xB.
Vec2 reprojection_error(const Vec2& xa, const Vec2& xb, const Mat3& t);

struct FineLossResult {
  Tensor loss;
  bool empty = false;  // no in-window matches; loss is zero
};

// Mean over matches of ||E(Z) - target||_2 / sigma^2(Z), with the heatmap's
// total variance floored at 1e-6. Targets are in normalized grid units and
// must already exclude out-of-window entries. Gradient flows through both
// the expectation and the variance.
FineLossResult fine_loss(const std::vector<Tensor>& heatmaps,
                         const std::vector<std::array<double, 2>>& targets,
                         int n);

// Mean binary cross-entropy of inlier weights against 0/1 labels.
Tensor classification_loss(const Tensor& w, const Tensor& labels);

struct EssentialLossResult {
  Tensor loss;
  bool quality_warning = false;  // denominator floor hit on >10% of terms
};

// Mean over correspondences of (p'^T E_hat p)^2 divided by the squared
// epipolar-line terms of E_gt, each denominator floored at 1e-12. coords
// rows are (u,v,u',v') in normalized camera coordinates.
EssentialLossResult essential_loss(const Tensor& e_hat, const Mat3& e_gt,
                                   const Tensor& coords);

// L_total = L_coarse + L_fine + alpha * L_cls + beta * L_ess.
Tensor total_loss(const Tensor& l_coarse, const Tensor& l_fine,
                  const Tensor& l_cls, const Tensor& l_ess, double alpha = 0.5,
                  double beta = 0.1);

}  // namespace nmatch
