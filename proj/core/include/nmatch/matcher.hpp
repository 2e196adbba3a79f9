#pragma once

#include <string>
#include <vector>

#include "nmatch/enhancer.hpp"
#include "nmatch/tensor.hpp"

namespace nmatch {

struct CoarseMatch {
  int ia = 0, ja = 0;  // cell (row, col) in grid A
  int ib = 0, jb = 0;  // cell (row, col) in grid B
  double confidence = 0.0;
};

struct CoarseMatchSet {
  std::vector<CoarseMatch> entries;
  int grid_h_a = 0, grid_w_a = 0;
  int grid_h_b = 0, grid_w_b = 0;
};

struct PixelMatch {
  double uA = 0, vA = 0, uB = 0, vB = 0;
  double conf_coarse = 0, conf_fine = 0, var_heatmap = 0;
};

struct PixelMatchSet {
  std::vector<PixelMatch> entries;
  int skipped_border = 0;  // coarse matches whose fine patch left the map
};

// S(i,j) = <a_i/|a_i|, b_j/|b_j|> / tau_s. Zero-norm rows are flagged
// unmatchable with a large negative surrogate score.
Tensor score_matrix(const Tensor& fa, const Tensor& fb, double tau_s = 0.1);

// Elementwise product of row-wise and column-wise softmax.
Tensor dual_softmax(const Tensor& s);

// Mutual-nearest-neighbor selection over confidences >= tau_c; ties resolved
// toward the smaller column index, then the smaller row index.
CoarseMatchSet select_coarse(const Tensor& p, double tau_c, int grid_h_a,
                             int grid_w_a, int grid_h_b, int grid_w_b);

// Normalized heatmap grid values (2j - n)/n for 1-based j = 1..n.
std::vector<double> heatmap_grid(int n);

// Softmax heatmap from correlating the center row of enhanced patch A
// against every row of enhanced patch B. Tokens are [n*n, c].
Tensor fine_heatmap(const Tensor& enh_a, const Tensor& enh_b);

struct HeatmapStats {
  Tensor offset_x, offset_y;  // scalar tensors, grid units, 0 at center
  Tensor variance;            // scalar, total (x + y) grid-unit variance
  Tensor peak;                // scalar, heatmap maximum (no gradient)
};

// Spatial expectation of a [n*n] heatmap over the normalized grid, offset
// measured from the grid's center value.
HeatmapStats heatmap_stats(const Tensor& z, int n);

// Refine every coarse match by local-patch correlation on the fine maps.
// fine_a/fine_b are [H/2, W/2, c]; coordinates are emitted in original-image
// pixels with sub-pixel precision on the B side.
PixelMatchSet fine_match(const CoarseMatchSet& coarse, const Tensor& fine_a,
                         const Tensor& fine_b, const FeFormer& fine_former,
                         int w_f = 5);

// CSV with header uA,vA,uB,vB,conf_coarse,conf_fine,var_heatmap,
// 6-decimal fixed point.
void write_match_csv(const std::string& path, const PixelMatchSet& matches);

}  // namespace nmatch
