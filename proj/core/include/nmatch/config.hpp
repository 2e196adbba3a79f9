#pragma once

#include <map>
#include <string>

namespace nmatch {

enum class PeMode { Normalized, Absolute };
enum class OutlierMode { Learned, Consensus };

// Pipeline settings. The desk profile is the default; the paper profile scales
// channels and input size up but changes nothing structural.
struct PipelineConfig {
  int image_size = 128;     // expected square input edge, multiple of 8
  int c_coarse = 64;        // coarse feature channels, divisible by 4
  int c_fine = 32;          // fine feature channels
  int layers_coarse = 4;    // coarse enhancer alternations
  int layers_fine = 2;      // fine enhancer alternations
  int heads = 8;
  int window = 5;           // fine correlation window, odd
  double tau_score = 0.1;   // score temperature
  double tau_confidence = 0.2;
  bool use_fpm = true;
  PeMode pe_mode = PeMode::Normalized;
  OutlierMode outlier_mode = OutlierMode::Learned;
  uint64_t seed = 0;

  static PipelineConfig desk();
  static PipelineConfig paper();
  void validate() const;  // throws invalid_argument on bad combinations
};

// Flat `key = value` text config. '#' starts a comment; blank lines are
// skipped; unknown keys are an error.
PipelineConfig parse_config(const std::map<std::string, std::string>& kv);
PipelineConfig load_config(const std::string& path);

}  // namespace nmatch
