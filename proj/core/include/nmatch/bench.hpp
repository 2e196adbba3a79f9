#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nmatch/noise.hpp"
#include "nmatch/pipeline.hpp"

namespace nmatch {

struct SweepSpec {
  NoiseSpec::Kind kind = NoiseSpec::Kind::AdditiveGaussian;
  std::vector<double> levels;
};

// Default sweeps: gaussian SNR {5,2,0,-2,-5} dB and stripe variance
// {0.05,0.08,0.10,0.12,0.15}.
std::vector<SweepSpec> default_sweeps();

struct BenchOptions {
  int synthetic_pairs = 20;
  int image_size = 128;
  double warp_magnitude = 1.0;
  uint64_t seed = 0;
  std::vector<SweepSpec> sweeps;  // empty -> default_sweeps()
  std::string report_path;        // per-pair rows; empty skips the file
  std::string summary_path;       // per-level aggregates; empty skips
  bool stable_runtime = false;    // write rt_s as 0 for bitwise-stable output
};

struct BenchRow {
  int pair_id = 0;
  std::string noise_type;  // "clean", "gaussian", "stripe"
  double noise_level = 0;
  int ncm = 0;
  int sr = 0;
  double rmse = 20.0;
  double rt_s = 0;
};

struct BenchAggregate {
  std::string noise_type;
  double noise_level = 0;
  double mean_ncm = 0;
  double sr = 0;
  double mean_rmse = 0;
  double mean_rt_s = 0;
  std::optional<double> acr;  // vs the clean level; absent if clean NCM is 0
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchAggregate> aggregates;
};

// Runs the pipeline over synthetic pairs. Noise is injected into the query
// (left) image only; the reference is untouched. Rows come out in
// pair-then-level order and the whole run is deterministic per seed.
BenchReport run_bench(const Pipeline& pipeline, const BenchOptions& options);

void write_bench_report(const std::string& path,
                        const std::vector<BenchRow>& rows);
void write_bench_summary(const std::string& path,
                         const std::vector<BenchAggregate>& aggregates);

}  // namespace nmatch
