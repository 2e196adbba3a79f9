#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "nmatch/geometry.hpp"
#include "nmatch/image.hpp"

namespace nmatch {

struct SyntheticPair {
  Image imageA;
  Image imageB;
  Mat3 h_gt;  // maps A pixel coordinates to B pixel coordinates
  std::optional<Mat3> intrinsics;
};

// Procedural feature-rich test pair: multi-octave value-noise texture with
// step edges and blobs, warped by a random homography (rotation <= 15 deg,
// scale in [0.9,1.1], translation <= 10% of the size, mild projective terms).
// warp_magnitude in [0,1] scales every warp component. Deterministic per seed.
SyntheticPair generate_pair(uint64_t seed, int size, double warp_magnitude = 1.0);

// Labelled correspondence set in normalized camera coordinates, used to train
// and test the match classifier.
struct CorrespondenceSet {
  // n x 4 rows: (x, y, x', y')
  std::vector<std::array<double, 4>> points;
  std::vector<int> labels;  // 1 inlier, 0 outlier
  Mat3 e_gt;                // essential matrix of the generating pose
};

// Random relative pose (E = [t]x R), 3-D points projected into both views;
// inliers get Gaussian jitter of at most jitter_px pixels (in a nominal
// 128px image, focal 64), outliers are uniform in the view box.
CorrespondenceSet generate_correspondences(uint64_t seed, int n,
                                           double inlier_ratio,
                                           double jitter_px = 1.0);

}  // namespace nmatch
