#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "nmatch/geometry.hpp"
#include "nmatch/matcher.hpp"

namespace nmatch {

struct EvalReport {
  int ncm = 0;
  bool success = false;
  bool ncm_boundary = false;  // exactly 10 correct matches: flagged, not a success
  double rmse = 20.0;
  double runtime_s = 0.0;
  std::optional<double> acr;
};

// Least-squares projective fit from (uA,vA,uB,vB) rows using the
// Hartley-normalized direct linear transform. Throws std::domain_error on
// degenerate (e.g. collinear) configurations. H is scaled so H[2][2] = 1
// when that entry is nonzero.
Mat3 dlt_homography(const std::vector<std::array<double, 4>>& pts);

struct HomographyEstimate {
  Mat3 h;
  std::vector<char> inliers;
};

// Seeded sample-consensus loop (minimal 4-point fits, symmetric transfer
// error) followed by a least-squares refit on the winning inlier set.
HomographyEstimate estimate_homography(
    const std::vector<std::array<double, 4>>& pts, uint64_t seed = 0,
    double tol_px = 3.0, int iterations = 2000);
HomographyEstimate estimate_homography(const PixelMatchSet& matches,
                                       uint64_t seed = 0, double tol_px = 3.0,
                                       int iterations = 2000);

// Count of matches whose reprojection error under the ground-truth map is
// below tol_px in both axes (strict per-axis rule).
int ncm(const PixelMatchSet& matches, const Mat3& truth, double tol_px = 3.0);

// A pair succeeds iff it has strictly more than 10 correct matches.
bool success(int ncm_value);

// Root mean square of the reprojection residual norms over the given
// matches.
double rmse(const PixelMatchSet& matches, const Mat3& h);

// Ratio of noisy to clean correct-match counts; absent when clean is zero.
std::optional<double> acr(double ncm_noise, double ncm_clean);

// Full per-pair evaluation: NCM against the ground truth, the success rule,
// and RMSE under a homography estimated from the correct matches (20.0 when
// the pair fails or estimation fails).
EvalReport evaluate_pair(const PixelMatchSet& matches, const Mat3& truth,
                         uint64_t seed = 0, double tol_px = 3.0);

}  // namespace nmatch
