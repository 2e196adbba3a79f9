#include "nmatch/selftest.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "nmatch/bench.hpp"
#include "nmatch/losses.hpp"
#include "nmatch/matcher.hpp"
#include "nmatch/metrics.hpp"
#include "nmatch/noise.hpp"
#include "nmatch/outlier.hpp"
#include "nmatch/pipeline.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/synth.hpp"

namespace nmatch {

namespace {

struct Reporter {
  std::ostream& os;
  int failures = 0;
  void check(const char* name, bool ok) {
    os << (ok ? "ok   " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  }
};

bool rng_deterministic() {
  Rng a(42, "x"), b(42, "x");
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() != b.next_u64()) return false;
  return true;
}

bool noise_invariants() {
  auto pair = generate_pair(7, 64);
  NoiseSpec spec{NoiseSpec::Kind::AdditiveGaussian, 0.0, 11};
  Image before = pair.imageB;
  Image n1 = apply_noise(pair.imageA, spec);
  Image n2 = apply_noise(pair.imageA, spec);
  if (n1.pixels != n2.pixels) return false;
  if (pair.imageB.pixels != before.pixels) return false;
  for (double v : n1.pixels)
    if (v < 0.0 || v > 1.0) return false;
  Image s = add_stripe_noise(pair.imageA, 0.1, 3);
  for (int x = 0; x < s.width; ++x) {
    double ratio = 0;
    bool seen = false;
    for (int y = 0; y < s.height; ++y) {
      double base = pair.imageA.at(y, x);
      double out = s.at(y, x);
      if (base < 1e-6 || out <= 0.0 || out >= 1.0) continue;  // clamp region
      double r = out / base;
      if (!seen) {
        ratio = r;
        seen = true;
      } else if (std::abs(r - ratio) > 1e-9)
        return false;
    }
  }
  return true;
}

bool matcher_closed_forms() {
  auto g = heatmap_grid(5);
  if (std::abs(g[0] + 0.6) > 1e-12 || std::abs(g[4] - 1.0) > 1e-12)
    return false;
  Rng rng(5, "selftest");
  Tensor s({6, 6});
  for (auto& v : s.data()) v = rng.uniform(-5, 5);
  auto p = dual_softmax(s);
  auto rows = softmax(s, 1);
  auto cols = softmax(s, 0);
  for (int i = 0; i < p.size(); ++i)
    if (std::abs(p.data()[i] - rows.data()[i] * cols.data()[i]) > 1e-12)
      return false;
  auto set = select_coarse(p, 0.0, 2, 3, 2, 3);
  std::set<int> ra, rb;
  for (const auto& m : set.entries) {
    if (!ra.insert(m.ia * 3 + m.ja).second) return false;
    if (!rb.insert(m.ib * 3 + m.jb).second) return false;
  }
  return true;
}

bool geometry_oracles() {
  auto set = generate_correspondences(3, 20, 1.0, 0.0);
  Tensor coords({20, 4});
  for (int i = 0; i < 20; ++i)
    for (int c = 0; c < 4; ++c) coords.data()[i * 4 + c] = set.points[i][c];
  NoGradGuard ng;
  auto e = weighted_eight_point(coords, Tensor::full({20}, 1.0));
  Mat3 em = to_mat3(e);
  for (const auto& p : set.points) {
    double r0 = em(0, 0) * p[0] + em(0, 1) * p[1] + em(0, 2);
    double r1 = em(1, 0) * p[0] + em(1, 1) * p[1] + em(1, 2);
    double r2 = em(2, 0) * p[0] + em(2, 1) * p[1] + em(2, 2);
    if (std::abs(p[2] * r0 + p[3] * r1 + r2) > 1e-8) return false;
  }

  Rng rng(9, "selftest");
  Mat3 h = Mat3::identity();
  h(0, 0) = 1.1;
  h(0, 2) = 5;
  h(1, 2) = -3;
  std::vector<std::array<double, 4>> pts;
  for (int i = 0; i < 20; ++i) {
    double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
    Vec2 b = h.apply({x, y});
    pts.push_back({x, y, b.x, b.y});
  }
  auto est = estimate_homography(pts);
  for (const auto& p : pts) {
    Vec2 b = est.h.apply({p[0], p[1]});
    if (std::hypot(b.x - p[2], b.y - p[3]) > 1e-6) return false;
  }
  return true;
}

bool loss_closed_forms() {
  Tensor half({1, 1}, std::vector<double>{0.5});
  Tensor one({1, 1}, std::vector<double>{1.0});
  if (std::abs(coarse_loss(half, one).value() - std::log(2.0)) > 1e-9)
    return false;
  auto total = total_loss(Tensor::scalar(1), Tensor::scalar(1),
                          Tensor::scalar(1), Tensor::scalar(1));
  if (std::abs(total.value() - 2.6) > 1e-12) return false;
  auto ratio = acr(434.0, 993.0);
  if (!ratio || std::abs(*ratio - 434.0 / 993.0) > 1e-12) return false;
  return true;
}

bool pipeline_deterministic() {
  PipelineConfig cfg;
  cfg.image_size = 64;
  cfg.c_coarse = 16;
  cfg.c_fine = 8;
  cfg.layers_coarse = 1;
  cfg.layers_fine = 1;
  cfg.heads = 4;
  ParamStore params(1);
  Pipeline pipeline(params, cfg);
  auto pair = generate_pair(13, 64);
  auto m1 = pipeline.match(pair.imageA, pair.imageB);
  auto m2 = pipeline.match(pair.imageA, pair.imageB);
  if (m1.entries.size() != m2.entries.size()) return false;
  for (size_t i = 0; i < m1.entries.size(); ++i) {
    const auto& a = m1.entries[i];
    const auto& b = m2.entries[i];
    if (a.uA != b.uA || a.vA != b.vA || a.uB != b.uB || a.vB != b.vB)
      return false;
  }
  return true;
}

bool bench_deterministic() {
  PipelineConfig cfg;
  cfg.image_size = 64;
  cfg.c_coarse = 16;
  cfg.c_fine = 8;
  cfg.layers_coarse = 1;
  cfg.layers_fine = 1;
  cfg.heads = 4;
  ParamStore params(1);
  Pipeline pipeline(params, cfg);
  BenchOptions opt;
  opt.synthetic_pairs = 2;
  opt.image_size = 64;
  opt.sweeps = {{NoiseSpec::Kind::AdditiveGaussian, {5.0}}};
  opt.stable_runtime = true;
  auto r1 = run_bench(pipeline, opt);
  auto r2 = run_bench(pipeline, opt);
  if (r1.rows.size() != r2.rows.size()) return false;
  if (r1.rows.size() != 2u * 2u) return false;  // pairs x (1 + levels)
  for (size_t i = 0; i < r1.rows.size(); ++i)
    if (r1.rows[i].ncm != r2.rows[i].ncm ||
        r1.rows[i].rmse != r2.rows[i].rmse)
      return false;
  return true;
}

}  // namespace

int run_selftest(std::ostream& os) {
  Reporter r{os};
  r.check("rng determinism", rng_deterministic());
  r.check("noise invariants", noise_invariants());
  r.check("matching closed forms", matcher_closed_forms());
  r.check("geometry oracles", geometry_oracles());
  r.check("loss closed forms", loss_closed_forms());
  r.check("pipeline determinism", pipeline_deterministic());
  r.check("bench determinism", bench_deterministic());
  os << (r.failures == 0 ? "selftest: all checks passed"
                         : "selftest: FAILURES present")
     << "\n";
  return r.failures;
}

}  // namespace nmatch
