#include "nmatch/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nmatch/rng.hpp"

namespace nmatch {

std::string NoiseSpec::kind_name() const {
  switch (kind) {
    case Kind::Clean:
      return "clean";
    case Kind::AdditiveGaussian:
      return "gaussian";
    case Kind::Stripe:
      return "stripe";
  }
  return "unknown";
}

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double mean_square_power(const Image& img) {
  if (img.pixels.empty()) throw std::invalid_argument("noise: empty image");
  double s = 0.0;
  for (double v : img.pixels) s += v * v;
  return s / static_cast<double>(img.pixels.size());
}

}  // namespace

Image add_gaussian_noise(const Image& img, double snr_db, uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return img;
  double power = mean_square_power(img);
  double sigma2 = power / std::pow(10.0, snr_db / 20.0);
  double sigma = std::sqrt(sigma2);
  Rng rng(seed, "gaussian_noise");
  Image out(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = clamp01(img.pixels[i] + sigma * rng.normal());
  return out;
}

Image add_stripe_noise(const Image& img, double variance, uint64_t seed) {
  if (variance < 0)
    throw std::invalid_argument("stripe noise variance must be >= 0");
  if (variance == 0) return img;
  double a = std::sqrt(3.0 * variance);
  Rng rng(seed, "stripe_noise");
  std::vector<double> mult(img.width);
  for (int x = 0; x < img.width; ++x) mult[x] = rng.uniform(-a, a);
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(y, x) = clamp01(img.at(y, x) * (1.0 + mult[x]));
  return out;
}

Image apply_noise(const Image& img, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseSpec::Kind::Clean:
      return img;
    case NoiseSpec::Kind::AdditiveGaussian:
      return add_gaussian_noise(img, spec.level, spec.seed);
    case NoiseSpec::Kind::Stripe:
      return add_stripe_noise(img, spec.level, spec.seed);
  }
  throw std::logic_error("unreachable noise kind");
}

}  // namespace nmatch
