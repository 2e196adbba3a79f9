#include "nmatch/bench.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "nmatch/metrics.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/synth.hpp"

namespace nmatch {

std::vector<SweepSpec> default_sweeps() {
  return {
      {NoiseSpec::Kind::AdditiveGaussian, {5.0, 2.0, 0.0, -2.0, -5.0}},
      {NoiseSpec::Kind::Stripe, {0.05, 0.08, 0.10, 0.12, 0.15}},
  };
}

namespace {

std::string kind_label(NoiseSpec::Kind kind) {
  return kind == NoiseSpec::Kind::AdditiveGaussian ? "gaussian" : "stripe";
}

BenchRow evaluate(const Pipeline& pipeline, int pair_id,
                  const std::string& noise_type, double level, const Image& a,
                  const Image& b, const Mat3& h_gt, bool stable_runtime) {
  auto t0 = std::chrono::steady_clock::now();
  auto matches = pipeline.match(a, b);
  auto report = evaluate_pair(matches, h_gt, pipeline.config().seed);
  auto t1 = std::chrono::steady_clock::now();

  BenchRow row;
  row.pair_id = pair_id;
  row.noise_type = noise_type;
  row.noise_level = level;
  row.ncm = report.ncm;
  row.sr = report.success ? 1 : 0;
  row.rmse = report.rmse;
  row.rt_s = stable_runtime
                 ? 0.0
                 : std::chrono::duration<double>(t1 - t0).count();
  return row;
}

}  // namespace

BenchReport run_bench(const Pipeline& pipeline, const BenchOptions& options) {
  if (options.synthetic_pairs < 1)
    throw std::invalid_argument("bench needs at least one pair");
  auto sweeps = options.sweeps.empty() ? default_sweeps() : options.sweeps;

  BenchReport out;
  Rng root(options.seed, "bench");
  for (int pair_id = 0; pair_id < options.synthetic_pairs; ++pair_id) {
    auto pair_rng = root.derive(pair_id, "bench_pair");
    auto pair = generate_pair(pair_rng.next_u64(), options.image_size,
                              options.warp_magnitude);
    const Image reference = pair.imageB;

    out.rows.push_back(evaluate(pipeline, pair_id, "clean", 0.0, pair.imageA,
                                reference, pair.h_gt,
                                options.stable_runtime));
    for (size_t s = 0; s < sweeps.size(); ++s)
      for (size_t l = 0; l < sweeps[s].levels.size(); ++l) {
        NoiseSpec spec;
        spec.kind = sweeps[s].kind;
        spec.level = sweeps[s].levels[l];
        spec.seed = pair_rng.derive(s * 100 + l, "noise").next_u64();
        Image noisy = apply_noise(pair.imageA, spec);
        out.rows.push_back(evaluate(pipeline, pair_id, kind_label(spec.kind),
                                    spec.level, noisy, reference, pair.h_gt,
                                    options.stable_runtime));
      }
  }

  // aggregate in first-seen level order: clean first, then sweep order
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, std::vector<const BenchRow*>> groups;
  for (const auto& row : out.rows) {
    auto key = std::make_pair(row.noise_type, row.noise_level);
    if (groups.find(key) == groups.end()) order.push_back(key);
    groups[key].push_back(&row);
  }
  double clean_mean_ncm = 0;
  for (const auto* row : groups[{"clean", 0.0}])
    clean_mean_ncm += row->ncm;
  clean_mean_ncm /= groups[{"clean", 0.0}].size();

  for (const auto& key : order) {
    const auto& rows = groups[key];
    BenchAggregate agg;
    agg.noise_type = key.first;
    agg.noise_level = key.second;
    for (const auto* row : rows) {
      agg.mean_ncm += row->ncm;
      agg.sr += row->sr;
      agg.mean_rmse += row->rmse;
      agg.mean_rt_s += row->rt_s;
    }
    double n = static_cast<double>(rows.size());
    agg.mean_ncm /= n;
    agg.sr /= n;
    agg.mean_rmse /= n;
    agg.mean_rt_s /= n;
    agg.acr = acr(agg.mean_ncm, clean_mean_ncm);
    out.aggregates.push_back(agg);
  }

  if (!options.report_path.empty())
    write_bench_report(options.report_path, out.rows);
  if (!options.summary_path.empty())
    write_bench_summary(options.summary_path, out.aggregates);
  return out;
}

void write_bench_report(const std::string& path,
                        const std::vector<BenchRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "pair_id,noise_type,noise_level,ncm,sr,rmse,rt_s\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.4f,%d,%d,%.6f,%.6f\n",
                  row.pair_id, row.noise_type.c_str(), row.noise_level,
                  row.ncm, row.sr, row.rmse, row.rt_s);
    os << buf;
  }
}

void write_bench_summary(const std::string& path,
                         const std::vector<BenchAggregate>& aggregates) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "noise_type,noise_level,mean_ncm,sr,mean_rmse,mean_rt_s,acr\n";
  char buf[256];
  for (const auto& agg : aggregates) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.6f,%.6f,",
                  agg.noise_type.c_str(), agg.noise_level, agg.mean_ncm,
                  agg.sr, agg.mean_rmse, agg.mean_rt_s);
    os << buf;
    if (agg.acr) {
      std::snprintf(buf, sizeof(buf), "%.6f", *agg.acr);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace nmatch
