#pragma once

#include <cstdint>
#include <string>

#include "nmatch/image.hpp"

namespace nmatch {

// A noise injection recipe for one benchmark condition.
struct NoiseSpec {
  enum class Kind { Clean, AdditiveGaussian, Stripe };
  Kind kind = Kind::Clean;
  // snr in dB for gaussian, variance for stripe; ignored when clean
  double level = 0.0;
  uint64_t seed = 0;

  std::string kind_name() const;
};

// Additive zero-mean Gaussian noise with variance sigma^2 = E(I)/10^(snr/20),
// where E(I) is the mean of squared pixel values. Output clamped to [0,1].
// snr_db of +infinity returns the input unchanged.
Image add_gaussian_noise(const Image& img, double snr_db, uint64_t seed);

// Multiplicative vertical stripe noise: one zero-mean uniform multiplier per
// column (half-width sqrt(3*variance)), J = I + n*I, clamped to [0,1].
Image add_stripe_noise(const Image& img, double variance, uint64_t seed);

Image apply_noise(const Image& img, const NoiseSpec& spec);

}  // namespace nmatch
