#include "nmatch/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "nmatch/losses.hpp"
#include "nmatch/optim.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/synth.hpp"

namespace nmatch {

void write_train_log(const std::string& path,
                     const std::vector<TrainLogRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "step,loss_total,loss_coarse,loss_fine,loss_cls,loss_ess\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9f,%.9f,%.9f,%.9f,%.9f\n", r.step,
                  r.total, r.coarse, r.fine, r.cls, r.ess);
    os << buf;
  }
}

std::vector<TrainLogRow> train_outlier_network(const TrainOutlierOptions& opt,
                                               ParamStore& params) {
  OutlierNet net(params);
  Adam adam(params.with_prefix("outlier."), opt.lr);
  Rng root(opt.seed, "train_outlier");

  std::vector<TrainLogRow> log;
  log.reserve(opt.steps);
  for (long step = 0; step < opt.steps; ++step) {
    uint64_t data_seed = root.next_u64();
    double ratio = root.uniform(0.3, 0.9);
    double jitter = root.uniform(0.0, 1.0);
    auto set = generate_correspondences(data_seed, opt.batch, ratio, jitter);

    int n = static_cast<int>(set.points.size());
    Tensor coords({n, 4});
    Tensor labels({n});
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < 4; ++c) coords.data()[i * 4 + c] = set.points[i][c];
      labels.data()[i] = set.labels[i];
    }

    auto w = net.weights(coords);
    auto cls = classification_loss(w, labels);
    Tensor ess = Tensor::scalar(0.0);
    try {
      auto e_hat = weighted_eight_point(coords, w);
      ess = essential_loss(e_hat, set.e_gt, coords).loss;
    } catch (const std::domain_error&) {
      // too few confident rows this step: classification term only
    }
    auto total = add(mul_scalar(cls, opt.cls_weight),
                     mul_scalar(ess, opt.ess_weight));
    if (!std::isfinite(total.value()))
      throw std::runtime_error("outlier training diverged at step " +
                               std::to_string(step));
    adam.zero_grad();
    total.backward();
    adam.step();
    log.push_back(
        {step, total.value(), 0.0, 0.0, cls.value(), ess.value()});
  }
  if (!opt.weights_out.empty()) params.save(opt.weights_out);
  if (!opt.log_out.empty()) write_train_log(opt.log_out, log);
  return log;
}

Tensor coarse_ground_truth(const Mat3& h, int grid_h_a, int grid_w_a,
                           int grid_h_b, int grid_w_b, int stride) {
  Tensor gt = Tensor::zeros({grid_h_a * grid_w_a, grid_h_b * grid_w_b});
  double half = stride / 2.0;
  for (int ia = 0; ia < grid_h_a; ++ia)
    for (int ja = 0; ja < grid_w_a; ++ja) {
      Vec2 center{stride * ja + half, stride * ia + half};
      Vec2 mapped;
      try {
        mapped = h.apply(center);
      } catch (const std::domain_error&) {
        continue;
      }
      int jb = static_cast<int>(std::lround((mapped.x - half) / stride));
      int ib = static_cast<int>(std::lround((mapped.y - half) / stride));
      if (ib < 0 || ib >= grid_h_b || jb < 0 || jb >= grid_w_b) continue;
      double dx = mapped.x - (stride * jb + half);
      double dy = mapped.y - (stride * ib + half);
      if (std::hypot(dx, dy) < half)
        gt.data()[(ia * grid_w_a + ja) * (grid_h_b * grid_w_b) +
                  ib * grid_w_b + jb] = 1.0;
    }
  return gt;
}

std::vector<TrainLogRow> train_matcher(const TrainMatcherOptions& opt,
                                       const PipelineConfig& config,
                                       ParamStore& params) {
  Pipeline pipeline(params, config);
  auto trainable = params.with_prefix("backbone.");
  for (auto& t : params.with_prefix("feformer.")) trainable.push_back(t);
  Adam adam(trainable, opt.lr);
  Rng root(opt.seed, "train_matcher");

  int w_f = config.window;
  int half = w_f / 2;
  std::vector<TrainLogRow> log;
  log.reserve(opt.steps);
  for (long step = 0; step < opt.steps; ++step) {
    auto pair = generate_pair(root.next_u64(), config.image_size);
    auto fwd = pipeline.forward_coarse(pair.imageA, pair.imageB);
    auto gt = coarse_ground_truth(pair.h_gt, fwd.grid_h_a, fwd.grid_w_a,
                                  fwd.grid_h_b, fwd.grid_w_b);
    auto lc = coarse_loss(fwd.p, gt);

    // fine supervision on a bounded sample of the positive coarse cells
    std::vector<Tensor> heatmaps;
    std::vector<std::array<double, 2>> targets;
    int fh_a = fwd.fine_a.extent(0), fw_a = fwd.fine_a.extent(1);
    int fh_b = fwd.fine_b.extent(0), fw_b = fwd.fine_b.extent(1);
    int c_fine = fwd.fine_a.extent(2);
    int nb = fwd.grid_h_b * fwd.grid_w_b;
    for (int a = 0; a < gt.extent(0) &&
                    static_cast<int>(heatmaps.size()) < opt.max_fine_cells;
         ++a) {
      int b = -1;
      for (int j = 0; j < nb; ++j)
        if (gt.data()[a * nb + j] > 0.5) {
          b = j;
          break;
        }
      if (b < 0) continue;
      int ia = a / fwd.grid_w_a, ja = a % fwd.grid_w_a;
      int ib = b / fwd.grid_w_b, jb = b % fwd.grid_w_b;
      int ya = ia * 4, xa = ja * 4, yb = ib * 4, xb = jb * 4;
      if (ya - half < 0 || xa - half < 0 || ya + half >= fh_a ||
          xa + half >= fw_a || yb - half < 0 || xb - half < 0 ||
          yb + half >= fh_b || xb + half >= fw_b)
        continue;
      // supervise relative to the anchors the fine stage actually uses
      // (cell origin at stride 8, i.e. fine coordinate 4i doubled)
      Vec2 anchor_a{8.0 * ja, 8.0 * ia};
      Vec2 anchor_b{8.0 * jb, 8.0 * ib};
      auto xi = reprojection_error(anchor_a, anchor_b, pair.h_gt);
      std::array<double, 2> target = {xi.x / w_f, xi.y / w_f};
      double in_window = 1.0 - 1.0 / w_f;
      if (std::abs(target[0]) > in_window || std::abs(target[1]) > in_window)
        continue;
      auto pa = reshape(crop(fwd.fine_a, ya - half, xa - half, w_f, w_f),
                        {w_f * w_f, c_fine});
      auto pb = reshape(crop(fwd.fine_b, yb - half, xb - half, w_f, w_f),
                        {w_f * w_f, c_fine});
      auto [ea, eb] = pipeline.fine_former().enhance(pa, pb);
      heatmaps.push_back(fine_heatmap(ea, eb));
      targets.push_back(target);
    }
    auto lf = fine_loss(heatmaps, targets, w_f);
    auto total = add(lc, lf.loss);
    if (!std::isfinite(total.value()))
      throw std::runtime_error("matcher training diverged at step " +
                               std::to_string(step));
    adam.zero_grad();
    total.backward();
    adam.step();
    log.push_back({step, total.value(), lc.value(), lf.loss.value(), 0.0, 0.0});
  }
  if (!opt.weights_out.empty()) params.save(opt.weights_out);
  if (!opt.log_out.empty()) write_train_log(opt.log_out, log);
  return log;
}

}  // namespace nmatch
