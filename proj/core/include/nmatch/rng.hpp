#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace nmatch {

// Deterministic SplitMix64 stream. All randomness in the library flows
// through this so that runs with equal seeds are reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed, std::string label = "")
      : state_(seed), label_(std::move(label)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; one spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // integer in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Independent substream for e.g. one benchmark pair or one worker.
  Rng derive(uint64_t stream, const std::string& label = "") const {
    uint64_t s = state_;
    s ^= (stream + 0x9e3779b97f4a7c15ull) * 0xff51afd7ed558ccdull;
    s ^= s >> 33;
    return Rng(s, label);
  }

  const std::string& label() const { return label_; }

 private:
  uint64_t state_;
  std::string label_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nmatch
