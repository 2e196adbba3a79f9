#pragma once

#include <string>
#include <vector>

#include "nmatch/config.hpp"
#include "nmatch/pipeline.hpp"
#include "nmatch/weights.hpp"

namespace nmatch {

struct TrainLogRow {
  long step = 0;
  double total = 0, coarse = 0, fine = 0, cls = 0, ess = 0;
};

// CSV with header step,loss_total,loss_coarse,loss_fine,loss_cls,loss_ess.
void write_train_log(const std::string& path,
                     const std::vector<TrainLogRow>& rows);

struct TrainOutlierOptions {
  uint64_t seed = 0;
  long steps = 10000;
  int batch = 32;
  double lr = 1e-3;
  double cls_weight = 0.5;
  double ess_weight = 0.1;
  std::string weights_out;   // NMW1 file; empty skips saving
  std::string log_out;       // CSV; empty skips
};

// Trains the match classifier on synthetic correspondence sets (inlier ratio
// drawn from [0.3, 0.9], inlier jitter up to 1px). Throws on divergence.
std::vector<TrainLogRow> train_outlier_network(const TrainOutlierOptions& opt,
                                               ParamStore& params);

struct TrainMatcherOptions {
  uint64_t seed = 0;
  long steps = 2000;
  double lr = 1e-3;
  int max_fine_cells = 16;   // supervised fine windows per step
  std::string weights_out;
  std::string log_out;
};

// Ground-truth coarse assignment for a known homography: cell pair (A,B) is
// positive iff the mapped center of A lands within half a coarse cell
// (4px at stride 8) of the center of B.
Tensor coarse_ground_truth(const Mat3& h, int grid_h_a, int grid_w_a,
                           int grid_h_b, int grid_w_b, int stride = 8);

// Trains backbone + enhancer end to end on synthetic warped pairs with the
// coarse cross-entropy and variance-weighted fine objectives.
std::vector<TrainLogRow> train_matcher(const TrainMatcherOptions& opt,
                                       const PipelineConfig& config,
                                       ParamStore& params);

}  // namespace nmatch
