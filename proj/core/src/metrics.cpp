#include "nmatch/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "nmatch/eigen.hpp"
#include "nmatch/rng.hpp"

namespace nmatch {

namespace {

struct Similarity {
  // x' = s*(x - cx), y' = s*(y - cy)
  double s = 1, cx = 0, cy = 0;

  Mat3 matrix() const {
    Mat3 t = Mat3::identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t(0, 2) = -s * cx;
    t(1, 2) = -s * cy;
    return t;
  }
};

Similarity normalizer(const std::vector<std::array<double, 4>>& pts, int off) {
  Similarity n;
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p[off];
    cy += p[off + 1];
  }
  cx /= pts.size();
  cy /= pts.size();
  double mean_dist = 0;
  for (const auto& p : pts)
    mean_dist += std::hypot(p[off] - cx, p[off + 1] - cy);
  mean_dist /= pts.size();
  n.cx = cx;
  n.cy = cy;
  n.s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  return n;
}

double sym_transfer_error(const Mat3& h, const Mat3& h_inv,
                          const std::array<double, 4>& p) {
  Vec2 fwd = h.apply({p[0], p[1]});
  Vec2 bwd = h_inv.apply({p[2], p[3]});
  double ef = std::hypot(fwd.x - p[2], fwd.y - p[3]);
  double eb = std::hypot(bwd.x - p[0], bwd.y - p[1]);
  return std::max(ef, eb);
}

}  // namespace

Mat3 dlt_homography(const std::vector<std::array<double, 4>>& pts) {
  size_t n = pts.size();
  if (n < 4) throw std::domain_error("homography fit needs at least 4 matches");

  Similarity ta = normalizer(pts, 0);
  Similarity tb = normalizer(pts, 2);

  // X = A^T A accumulated directly from the 2n constraint rows
  std::vector<double> x(81, 0.0);
  auto accumulate = [&](const std::array<double, 9>& row) {
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) x[i * 9 + j] += row[i] * row[j];
  };
  for (const auto& p : pts) {
    double u = ta.s * (p[0] - ta.cx), v = ta.s * (p[1] - ta.cy);
    double up = tb.s * (p[2] - tb.cx), vp = tb.s * (p[3] - tb.cy);
    accumulate({-u, -v, -1, 0, 0, 0, up * u, up * v, up});
    accumulate({0, 0, 0, -u, -v, -1, vp * u, vp * v, vp});
  }

  auto eig = jacobi_eigen(x, 9, 1e-6);
  // degenerate configurations leave a multi-dimensional null space
  double scale = std::max(eig.values[8], 1.0);
  if (eig.values[1] < 1e-12 * scale)
    throw std::domain_error("degenerate configuration for homography fit");

  Mat3 hn;
  for (int i = 0; i < 9; ++i) hn.m[i] = eig.vectors[i * 9 + 0];
  if (std::abs(hn.det()) < 1e-12)
    throw std::domain_error("degenerate (rank-deficient) homography");

  Mat3 h = tb.matrix().inverse() * hn * ta.matrix();
  if (std::abs(h(2, 2)) > 1e-12) {
    double w = h(2, 2);
    for (auto& v : h.m) v /= w;
  }
  return h;
}

HomographyEstimate estimate_homography(
    const std::vector<std::array<double, 4>>& pts, uint64_t seed, double tol_px,
    int iterations) {
  size_t n = pts.size();
  if (n < 4) throw std::domain_error("need at least 4 matches");

  Rng rng(seed, "consensus");
  std::vector<char> best_mask(n, 0);
  int best_count = -1;

  for (int it = 0; it < iterations; ++it) {
    std::array<size_t, 4> idx;
    for (auto& i : idx) i = rng.below(n);
    if (idx[0] == idx[1] || idx[0] == idx[2] || idx[0] == idx[3] ||
        idx[1] == idx[2] || idx[1] == idx[3] || idx[2] == idx[3])
      continue;
    std::vector<std::array<double, 4>> sample = {pts[idx[0]], pts[idx[1]],
                                                 pts[idx[2]], pts[idx[3]]};
    Mat3 h, h_inv;
    try {
      h = dlt_homography(sample);
      h_inv = h.inverse();
    } catch (const std::domain_error&) {
      continue;
    }
    std::vector<char> mask(n, 0);
    int count = 0;
    for (size_t i = 0; i < n; ++i) {
      try {
        if (sym_transfer_error(h, h_inv, pts[i]) < tol_px) {
          mask[i] = 1;
          ++count;
        }
      } catch (const std::domain_error&) {
      }
    }
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
    }
  }
  if (best_count < 4)
    throw std::domain_error("consensus failed to find a valid model");

  std::vector<std::array<double, 4>> inliers;
  for (size_t i = 0; i < n; ++i)
    if (best_mask[i]) inliers.push_back(pts[i]);
  HomographyEstimate est;
  est.h = dlt_homography(inliers);
  est.inliers = best_mask;
  return est;
}

namespace {

std::vector<std::array<double, 4>> to_rows(const PixelMatchSet& matches) {
  std::vector<std::array<double, 4>> pts;
  pts.reserve(matches.entries.size());
  for (const auto& m : matches.entries) pts.push_back({m.uA, m.vA, m.uB, m.vB});
  return pts;
}

}  // namespace

HomographyEstimate estimate_homography(const PixelMatchSet& matches,
                                       uint64_t seed, double tol_px,
                                       int iterations) {
  return estimate_homography(to_rows(matches), seed, tol_px, iterations);
}

int ncm(const PixelMatchSet& matches, const Mat3& truth, double tol_px) {
  int count = 0;
  for (const auto& m : matches.entries) {
    Vec2 mapped;
    try {
      mapped = truth.apply({m.uA, m.vA});
    } catch (const std::domain_error&) {
      continue;
    }
    if (std::abs(mapped.x - m.uB) < tol_px && std::abs(mapped.y - m.vB) < tol_px)
      ++count;
  }
  return count;
}

bool success(int ncm_value) { return ncm_value > 10; }

double rmse(const PixelMatchSet& matches, const Mat3& h) {
  if (matches.entries.empty())
    throw std::domain_error("rmse over an empty match set");
  double acc = 0.0;
  for (const auto& m : matches.entries) {
    Vec2 mapped = h.apply({m.uA, m.vA});
    double dx = mapped.x - m.uB, dy = mapped.y - m.vB;
    acc += dx * dx + dy * dy;
  }
  return std::sqrt(acc / matches.entries.size());
}

std::optional<double> acr(double ncm_noise, double ncm_clean) {
  if (ncm_clean <= 0) return std::nullopt;
  return ncm_noise / ncm_clean;
}

EvalReport evaluate_pair(const PixelMatchSet& matches, const Mat3& truth,
                         uint64_t seed, double tol_px) {
  EvalReport report;
  report.ncm = ncm(matches, truth, tol_px);
  report.success = success(report.ncm);
  report.ncm_boundary = (report.ncm == 10);
  report.rmse = 20.0;
  if (!report.success) return report;

  PixelMatchSet correct;
  for (const auto& m : matches.entries) {
    Vec2 mapped = truth.apply({m.uA, m.vA});
    if (std::abs(mapped.x - m.uB) < tol_px && std::abs(mapped.y - m.vB) < tol_px)
      correct.entries.push_back(m);
  }
  try {
    auto est = estimate_homography(correct, seed, tol_px, 2000);
    report.rmse = rmse(correct, est.h);
  } catch (const std::domain_error&) {
    report.success = false;
    report.rmse = 20.0;
  }
  return report;
}

}  // namespace nmatch
