#include "nmatch/losses.hpp"

#include <limits>
#include <stdexcept>

#include "nmatch/matcher.hpp"

namespace nmatch {

namespace {

constexpr double kProbClamp = 1e-6;
constexpr double kVarFloor = 1e-6;
constexpr double kDenFloor = 1e-12;
constexpr double kInf = std::numeric_limits<double>::max();

Tensor bce_mean(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("prediction/target shape mismatch: " +
                                shape_str(pred.shape()) + " vs " +
                                shape_str(target.shape()));
  auto p = clamp(pred, kProbClamp, 1.0 - kProbClamp);
  auto ones = Tensor::full(p.shape(), 1.0);
  auto pos = mul(target, log(p));
  auto negt = mul(sub(ones, target), log(sub(ones, p)));
  return neg(mean(add(pos, negt)));
}

}  // namespace

Tensor coarse_loss(const Tensor& p, const Tensor& p_gt) {
  return bce_mean(p, p_gt);
}

Vec2 reprojection_error(const Vec2& xa, const Vec2& xb, const Mat3& t) {
  Vec2 mapped = t.apply(xa);
  return {mapped.x - xb.x, mapped.y - xb.y};
}

FineLossResult fine_loss(const std::vector<Tensor>& heatmaps,
                         const std::vector<std::array<double, 2>>& targets,
                         int n) {
  if (heatmaps.size() != targets.size())
    throw std::invalid_argument("heatmap/target count mismatch");
  FineLossResult result;
  if (heatmaps.empty()) {
    result.loss = Tensor::scalar(0.0);
    result.empty = true;
    return result;
  }
  Tensor acc = Tensor::scalar(0.0);
  for (size_t i = 0; i < heatmaps.size(); ++i) {
    auto stats = heatmap_stats(heatmaps[i], n);
    auto dx = add_scalar(stats.offset_x, -targets[i][0]);
    auto dy = add_scalar(stats.offset_y, -targets[i][1]);
    auto dist = sqrt(add(square(dx), square(dy)));
    auto var = clamp(stats.variance, kVarFloor, kInf);
    acc = add(acc, div(dist, var));
  }
  result.loss = mul_scalar(acc, 1.0 / static_cast<double>(heatmaps.size()));
  return result;
}

Tensor classification_loss(const Tensor& w, const Tensor& labels) {
  return bce_mean(w, labels);
}

EssentialLossResult essential_loss(const Tensor& e_hat, const Mat3& e_gt,
                                   const Tensor& coords) {
  if (e_hat.size() != 9)
    throw std::invalid_argument("essential matrix must have 9 entries");
  if (coords.rank() != 2 || coords.extent(1) != 4)
    throw std::invalid_argument("expected [N,4] normalized coordinates");
  int n = coords.extent(0);
  if (n < 1) throw std::invalid_argument("empty correspondence set");

  Tensor z({n, 9});
  Tensor inv_den({n});
  int floored = 0;
  for (int i = 0; i < n; ++i) {
    double u = coords.data()[i * 4 + 0], v = coords.data()[i * 4 + 1];
    double up = coords.data()[i * 4 + 2], vp = coords.data()[i * 4 + 3];
    double p[3] = {u, v, 1.0};
    double pp[3] = {up, vp, 1.0};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) z.data()[i * 9 + 3 * r + c] = pp[r] * p[c];
    // epipolar line terms under the ground-truth matrix
    double l0 = e_gt(0, 0) * u + e_gt(0, 1) * v + e_gt(0, 2);
    double l1 = e_gt(1, 0) * u + e_gt(1, 1) * v + e_gt(1, 2);
    double m0 = e_gt(0, 0) * up + e_gt(1, 0) * vp + e_gt(2, 0);
    double m1 = e_gt(0, 1) * up + e_gt(1, 1) * vp + e_gt(2, 1);
    double den = l0 * l0 + l1 * l1 + m0 * m0 + m1 * m1;
    if (den < kDenFloor) {
      den = kDenFloor;
      ++floored;
    }
    inv_den.data()[i] = 1.0 / den;
  }

  auto residual = reshape(matmul(z, reshape(e_hat, {9, 1})), {n});
  auto terms = mul(square(residual), inv_den);
  EssentialLossResult result;
  result.loss = mean(terms);
  result.quality_warning = floored * 10 > n;
  return result;
}

Tensor total_loss(const Tensor& l_coarse, const Tensor& l_fine,
                  const Tensor& l_cls, const Tensor& l_ess, double alpha,
                  double beta) {
  return add(add(l_coarse, l_fine),
             add(mul_scalar(l_cls, alpha), mul_scalar(l_ess, beta)));
}

}  // namespace nmatch
