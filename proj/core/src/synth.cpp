#include "nmatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nmatch/rng.hpp"

namespace nmatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// one octave of lattice value noise, bilinear with smoothstep fade
struct ValueLattice {
  int cells;
  std::vector<double> values;  // (cells+1)^2

  ValueLattice(Rng& rng, int cells_) : cells(cells_) {
    values.resize(static_cast<size_t>(cells + 1) * (cells + 1));
    for (auto& v : values) v = rng.uniform();
  }

  double sample(double u, double v) const {
    double fu = u * cells, fv = v * cells;
    int iu = std::min(cells - 1, std::max(0, static_cast<int>(fu)));
    int iv = std::min(cells - 1, std::max(0, static_cast<int>(fv)));
    double tu = smooth(std::min(1.0, std::max(0.0, fu - iu)));
    double tv = smooth(std::min(1.0, std::max(0.0, fv - iv)));
    auto at = [&](int y, int x) {
      return values[static_cast<size_t>(y) * (cells + 1) + x];
    };
    double a = at(iv, iu) + (at(iv, iu + 1) - at(iv, iu)) * tu;
    double b = at(iv + 1, iu) + (at(iv + 1, iu + 1) - at(iv + 1, iu)) * tu;
    return a + (b - a) * tv;
  }
};

Image render_texture(Rng& rng, int size) {
  std::vector<ValueLattice> octaves;
  std::vector<double> amps;
  int cells = 4;
  double amp = 1.0, total = 0.0;
  for (int o = 0; o < 5; ++o) {
    octaves.emplace_back(rng, cells);
    amps.push_back(amp);
    total += amp;
    cells *= 2;
    amp *= 0.5;
  }

  struct Edge {
    double nx, ny, c, delta;
  };
  std::vector<Edge> edges;
  int n_edges = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n_edges; ++i) {
    double ang = rng.uniform(0.0, 2.0 * kPi);
    edges.push_back({std::cos(ang), std::sin(ang), rng.uniform(0.2, 0.8),
                     rng.uniform(0.1, 0.25) * (rng.below(2) ? 1.0 : -1.0)});
  }

  struct Blob {
    double cx, cy, r, delta;
  };
  std::vector<Blob> blobs;
  int n_blobs = 4 + static_cast<int>(rng.below(5));
  for (int i = 0; i < n_blobs; ++i) {
    blobs.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                     rng.uniform(0.05, 0.15),
                     rng.uniform(0.15, 0.35) * (rng.below(2) ? 1.0 : -1.0)});
  }

  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    double v = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      double u = (x + 0.5) / size;
      double val = 0.0;
      for (size_t o = 0; o < octaves.size(); ++o)
        val += amps[o] * octaves[o].sample(u, v);
      val /= total;
      for (const auto& e : edges)
        if (e.nx * u + e.ny * v > e.c) val += e.delta;
      for (const auto& b : blobs) {
        double d2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
        val += b.delta * std::exp(-d2 / (2.0 * b.r * b.r));
      }
      img.at(y, x) = std::min(1.0, std::max(0.0, val));
    }
  }
  return img;
}

double bilinear(const Image& img, double x, double y) {
  if (x < 0 || y < 0 || x > img.width - 1 || y > img.height - 1) return 0.0;
  int x0 = std::min(img.width - 2, static_cast<int>(x));
  int y0 = std::min(img.height - 2, static_cast<int>(y));
  if (img.width == 1) x0 = 0;
  if (img.height == 1) y0 = 0;
  double tx = x - x0, ty = y - y0;
  double a = img.at(y0, x0) * (1 - tx) + img.at(y0, std::min(x0 + 1, img.width - 1)) * tx;
  double b = img.at(std::min(y0 + 1, img.height - 1), x0) * (1 - tx) +
             img.at(std::min(y0 + 1, img.height - 1), std::min(x0 + 1, img.width - 1)) * tx;
  return a * (1 - ty) + b * ty;
}

Mat3 cross_matrix(double tx, double ty, double tz) {
  Mat3 m;
  m.m = {0, -tz, ty, tz, 0, -tx, -ty, tx, 0};
  return m;
}

Mat3 rotation_zyx(double ax, double ay, double az) {
  double cx = std::cos(ax), sx = std::sin(ax);
  double cy = std::cos(ay), sy = std::sin(ay);
  double cz = std::cos(az), sz = std::sin(az);
  Mat3 rx, ry, rz;
  rx.m = {1, 0, 0, 0, cx, -sx, 0, sx, cx};
  ry.m = {cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  rz.m = {cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  return rz * ry * rx;
}

}  // namespace

SyntheticPair generate_pair(uint64_t seed, int size, double warp_magnitude) {
  if (size < 8) throw std::invalid_argument("generate_pair: size too small");
  if (warp_magnitude < 0 || warp_magnitude > 1)
    throw std::invalid_argument("generate_pair: warp_magnitude in [0,1]");
  Rng rng(seed, "synth_pair");

  SyntheticPair pair;
  pair.imageA = render_texture(rng, size);

  double w = warp_magnitude;
  double ang = rng.uniform(-15.0, 15.0) * (kPi / 180.0) * w;
  double scale = 1.0 + rng.uniform(-0.1, 0.1) * w;
  double tx = rng.uniform(-0.1, 0.1) * size * w;
  double ty = rng.uniform(-0.1, 0.1) * size * w;
  double px = rng.uniform(-1.0, 1.0) * (0.2 / size) * w;
  double py = rng.uniform(-1.0, 1.0) * (0.2 / size) * w;

  double c = size / 2.0;
  Mat3 to_center = Mat3::identity(), from_center = Mat3::identity();
  to_center(0, 2) = -c;
  to_center(1, 2) = -c;
  from_center(0, 2) = c;
  from_center(1, 2) = c;

  Mat3 core = Mat3::identity();
  core(0, 0) = scale * std::cos(ang);
  core(0, 1) = -scale * std::sin(ang);
  core(1, 0) = scale * std::sin(ang);
  core(1, 1) = scale * std::cos(ang);
  core(0, 2) = tx;
  core(1, 2) = ty;
  core(2, 0) = px;
  core(2, 1) = py;

  pair.h_gt = from_center * core * to_center;

  Mat3 h_inv = pair.h_gt.inverse();
  pair.imageB = Image(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      Vec2 src = h_inv.apply({static_cast<double>(x), static_cast<double>(y)});
      pair.imageB.at(y, x) = bilinear(pair.imageA, src.x, src.y);
    }

  Mat3 k = Mat3::identity();
  k(0, 0) = k(1, 1) = size / 2.0;
  k(0, 2) = k(1, 2) = size / 2.0;
  pair.intrinsics = k;
  return pair;
}

CorrespondenceSet generate_correspondences(uint64_t seed, int n,
                                           double inlier_ratio,
                                           double jitter_px) {
  if (n < 8) throw std::invalid_argument("need at least 8 correspondences");
  if (inlier_ratio <= 0 || inlier_ratio > 1)
    throw std::invalid_argument("inlier_ratio in (0,1]");
  Rng rng(seed, "synth_corr");

  Mat3 r = rotation_zyx(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                        rng.uniform(-0.2, 0.2));
  double tx = rng.uniform(-1.0, 1.0), ty = rng.uniform(-1.0, 1.0),
         tz = rng.uniform(-0.3, 0.3);
  double tn = std::sqrt(tx * tx + ty * ty + tz * tz);
  if (tn < 1e-6) {
    tx = 1.0;
    ty = tz = 0.0;
    tn = 1.0;
  }
  tx /= tn;
  ty /= tn;
  tz /= tn;

  CorrespondenceSet set;
  set.e_gt = cross_matrix(tx, ty, tz) * r;

  // jitter expressed in normalized units of a nominal 128px view,
  // focal = 64 (the default matcher scale)
  double jitter = jitter_px / 64.0;
  int n_inliers = std::max(8, static_cast<int>(std::lround(n * inlier_ratio)));
  n_inliers = std::min(n_inliers, n);

  set.points.reserve(n);
  set.labels.reserve(n);
  int made = 0;
  while (made < n_inliers) {
    // 3-D point in front of camera 1
    double X = rng.uniform(-1.5, 1.5), Y = rng.uniform(-1.5, 1.5),
           Z = rng.uniform(2.0, 6.0);
    double X2 = r(0, 0) * X + r(0, 1) * Y + r(0, 2) * Z + tx;
    double Y2 = r(1, 0) * X + r(1, 1) * Y + r(1, 2) * Z + ty;
    double Z2 = r(2, 0) * X + r(2, 1) * Y + r(2, 2) * Z + tz;
    if (Z2 < 0.5) continue;
    double x1 = X / Z, y1 = Y / Z;
    double x2 = X2 / Z2, y2 = Y2 / Z2;
    if (std::abs(x1) > 1.2 || std::abs(y1) > 1.2 || std::abs(x2) > 1.2 ||
        std::abs(y2) > 1.2)
      continue;
    set.points.push_back({x1 + jitter * rng.normal(), y1 + jitter * rng.normal(),
                          x2 + jitter * rng.normal(),
                          y2 + jitter * rng.normal()});
    set.labels.push_back(1);
    ++made;
  }
  for (int i = n_inliers; i < n; ++i) {
    set.points.push_back({rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                          rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)});
    set.labels.push_back(0);
  }
  return set;
}

}  // namespace nmatch
