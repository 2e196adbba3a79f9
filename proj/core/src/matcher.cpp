#include "nmatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nmatch {

namespace {
constexpr double kDeadScore = -1e9;
constexpr double kZeroNorm = 1e-12;
}  // namespace

Tensor score_matrix(const Tensor& fa, const Tensor& fb, double tau_s) {
  if (fa.rank() != 2 || fb.rank() != 2 || fa.extent(1) != fb.extent(1))
    throw std::invalid_argument("score_matrix expects [N,c] and [N',c]");
  if (tau_s <= 0) throw std::invalid_argument("tau_s must be positive");
  int n = fa.extent(0), m = fb.extent(0);

  auto norm_a = row_norm(fa);
  auto norm_b = row_norm(fb);
  auto inv_a = div(Tensor::full({n}, 1.0),
                   clamp(norm_a, kZeroNorm, std::numeric_limits<double>::max()));
  auto inv_b = div(Tensor::full({m}, 1.0),
                   clamp(norm_b, kZeroNorm, std::numeric_limits<double>::max()));
  auto na = mul_rows(fa, inv_a);
  auto nb = mul_rows(fb, inv_b);
  auto s = mul_scalar(matmul(na, transpose(nb)), 1.0 / tau_s);

  bool any_dead = false;
  Tensor mask({n, m});
  for (int i = 0; i < n; ++i)
    if (norm_a.data()[i] < kZeroNorm) {
      any_dead = true;
      for (int j = 0; j < m; ++j) mask.data()[i * m + j] = kDeadScore;
    }
  for (int j = 0; j < m; ++j)
    if (norm_b.data()[j] < kZeroNorm) {
      any_dead = true;
      for (int i = 0; i < n; ++i) mask.data()[i * m + j] = kDeadScore;
    }
  return any_dead ? add(s, mask) : s;
}

Tensor dual_softmax(const Tensor& s) {
  if (s.rank() != 2) throw std::invalid_argument("dual_softmax expects [N,N']");
  return mul(softmax(s, 1), softmax(s, 0));
}

CoarseMatchSet select_coarse(const Tensor& p, double tau_c, int grid_h_a,
                             int grid_w_a, int grid_h_b, int grid_w_b) {
  if (p.rank() != 2) throw std::invalid_argument("select_coarse expects [N,N']");
  int n = p.extent(0), m = p.extent(1);
  if (n != grid_h_a * grid_w_a || m != grid_h_b * grid_w_b)
    throw std::invalid_argument("grid extents do not match the matrix");

  const auto& d = p.data();
  // first maximum keeps the smaller index on ties
  std::vector<int> row_best(n, 0), col_best(m, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 1; j < m; ++j)
      if (d[i * m + j] > d[i * m + row_best[i]]) row_best[i] = j;
  for (int j = 0; j < m; ++j)
    for (int i = 1; i < n; ++i)
      if (d[i * m + j] > d[col_best[j] * m + j]) col_best[j] = i;

  CoarseMatchSet set;
  set.grid_h_a = grid_h_a;
  set.grid_w_a = grid_w_a;
  set.grid_h_b = grid_h_b;
  set.grid_w_b = grid_w_b;
  for (int i = 0; i < n; ++i) {
    int j = row_best[i];
    if (col_best[j] != i) continue;
    double conf = d[i * m + j];
    if (conf < tau_c) continue;
    CoarseMatch cm;
    cm.ia = i / grid_w_a;
    cm.ja = i % grid_w_a;
    cm.ib = j / grid_w_b;
    cm.jb = j % grid_w_b;
    cm.confidence = conf;
    set.entries.push_back(cm);
  }
  return set;
}

std::vector<double> heatmap_grid(int n) {
  if (n < 1 || n % 2 == 0)
    throw std::invalid_argument("heatmap grid size must be odd and positive");
  std::vector<double> g(n);
  for (int j = 1; j <= n; ++j) g[j - 1] = (2.0 * j - n) / n;
  return g;
}

Tensor fine_heatmap(const Tensor& enh_a, const Tensor& enh_b) {
  if (enh_a.rank() != 2 || enh_b.rank() != 2 ||
      enh_a.extent(0) != enh_b.extent(0) || enh_a.extent(1) != enh_b.extent(1))
    throw std::invalid_argument("fine_heatmap expects equal [n*n,c] tokens");
  int tokens = enh_a.extent(0);
  int center = (tokens - 1) / 2;
  // same cosine/temperature scoring as the coarse stage: raw correlations
  // saturate the softmax and destroy both the sub-cell expectation and its
  // gradient
  auto scores = score_matrix(enh_a, enh_b);                 // [n*n, n*n]
  auto center_row = slice_rows(scores, center, 1);          // [1, n*n]
  return reshape(softmax(reshape(center_row, {tokens})), {tokens});
}

HeatmapStats heatmap_stats(const Tensor& z, int n) {
  if (z.rank() != 1 || z.size() != n * n)
    throw std::invalid_argument("heatmap must be a flat [n*n] distribution");
  auto grid = heatmap_grid(n);
  Tensor gx({n * n}), gy({n * n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      gx.data()[i * n + j] = grid[j];
      gy.data()[i * n + j] = grid[i];
    }
  double center_value = 1.0 / n;  // grid value at the middle cell

  HeatmapStats stats;
  auto ex = sum(mul(z, gx));
  auto ey = sum(mul(z, gy));
  stats.offset_x = add_scalar(ex, -center_value);
  stats.offset_y = add_scalar(ey, -center_value);
  auto var_x = sub(sum(mul(z, square(gx))), square(ex));
  auto var_y = sub(sum(mul(z, square(gy))), square(ey));
  stats.variance = add(var_x, var_y);
  stats.peak = Tensor::scalar(*std::max_element(z.data().begin(), z.data().end()));
  return stats;
}

PixelMatchSet fine_match(const CoarseMatchSet& coarse, const Tensor& fine_a,
                         const Tensor& fine_b, const FeFormer& fine_former,
                         int w_f) {
  if (w_f < 1 || w_f % 2 == 0)
    throw std::invalid_argument("fine window must be odd");
  if (fine_a.rank() != 3 || fine_b.rank() != 3)
    throw std::invalid_argument("fine maps must be [H,W,c]");
  NoGradGuard ng;
  int half = w_f / 2;
  int ha = fine_a.extent(0), wa = fine_a.extent(1), c = fine_a.extent(2);
  int hb = fine_b.extent(0), wb = fine_b.extent(1);

  PixelMatchSet out;
  for (const auto& cm : coarse.entries) {
    int ya = cm.ia * 4, xa = cm.ja * 4;
    int yb = cm.ib * 4, xb = cm.jb * 4;
    if (ya - half < 0 || xa - half < 0 || ya + half >= ha || xa + half >= wa ||
        yb - half < 0 || xb - half < 0 || yb + half >= hb || xb + half >= wb) {
      ++out.skipped_border;
      continue;
    }
    auto pa = reshape(crop(fine_a, ya - half, xa - half, w_f, w_f),
                      {w_f * w_f, c});
    auto pb = reshape(crop(fine_b, yb - half, xb - half, w_f, w_f),
                      {w_f * w_f, c});
    auto [ea, eb] = fine_former.enhance(pa, pb);
    auto z = fine_heatmap(ea, eb);
    auto stats = heatmap_stats(z, w_f);

    // grid units -> fine pixels (one fine pixel is 2/n grid units), then
    // fine pixels -> original pixels
    double dx = stats.offset_x.value() * (w_f / 2.0);
    double dy = stats.offset_y.value() * (w_f / 2.0);
    PixelMatch m;
    m.uA = 2.0 * xa;
    m.vA = 2.0 * ya;
    m.uB = 2.0 * (xb + dx);
    m.vB = 2.0 * (yb + dy);
    m.conf_coarse = cm.confidence;
    m.conf_fine = stats.peak.value();
    m.var_heatmap = stats.variance.value();
    out.entries.push_back(m);
  }
  return out;
}

void write_match_csv(const std::string& path, const PixelMatchSet& matches) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "uA,vA,uB,vB,conf_coarse,conf_fine,var_heatmap\n";
  char buf[256];
  for (const auto& m : matches.entries) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  m.uA, m.vA, m.uB, m.vB, m.conf_coarse, m.conf_fine,
                  m.var_heatmap);
    os << buf;
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace nmatch
