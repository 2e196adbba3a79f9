#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nmatch/bench.hpp"
#include "nmatch/selftest.hpp"

using namespace nmatch;

namespace {

PipelineConfig tiny() {
  PipelineConfig c;
  c.image_size = 64;
  c.c_coarse = 16;
  c.c_fine = 8;
  c.layers_coarse = 1;
  c.layers_fine = 1;
  c.heads = 4;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("default sweeps match the protocol") {
  auto sweeps = default_sweeps();
  REQUIRE(sweeps.size() == 2);
  CHECK(sweeps[0].kind == NoiseSpec::Kind::AdditiveGaussian);
  CHECK(sweeps[0].levels == std::vector<double>{5, 2, 0, -2, -5});
  CHECK(sweeps[1].kind == NoiseSpec::Kind::Stripe);
  CHECK(sweeps[1].levels == std::vector<double>{0.05, 0.08, 0.10, 0.12, 0.15});
}

TEST_CASE("row bookkeeping and aggregates") {
  ParamStore params(1);
  Pipeline pipeline(params, tiny());
  BenchOptions opt;
  opt.synthetic_pairs = 3;
  opt.image_size = 64;
  opt.seed = 5;
  opt.sweeps = {{NoiseSpec::Kind::AdditiveGaussian, {5.0, 0.0}},
                {NoiseSpec::Kind::Stripe, {0.1}}};
  opt.stable_runtime = true;
  auto report = run_bench(pipeline, opt);

  CHECK(report.rows.size() == 3u * (1 + 3));
  // pair-then-level order
  CHECK(report.rows[0].pair_id == 0);
  CHECK(report.rows[0].noise_type == "clean");
  CHECK(report.rows[3].noise_type == "stripe");
  CHECK(report.rows[4].pair_id == 1);

  REQUIRE(report.aggregates.size() == 4);
  CHECK(report.aggregates[0].noise_type == "clean");
  if (report.aggregates[0].mean_ncm > 0) {
    REQUIRE(report.aggregates[0].acr.has_value());
    CHECK(*report.aggregates[0].acr == doctest::Approx(1.0));
  } else {
    CHECK_FALSE(report.aggregates[0].acr.has_value());
  }
  for (const auto& agg : report.aggregates) {
    CHECK(agg.mean_ncm >= 0.0);
    CHECK(agg.sr >= 0.0);
    CHECK(agg.sr <= 1.0);
  }
}

TEST_CASE("bench output files are byte-stable across runs") {
  ParamStore params(2);
  Pipeline pipeline(params, tiny());
  BenchOptions opt;
  opt.synthetic_pairs = 2;
  opt.image_size = 64;
  opt.seed = 7;
  opt.sweeps = {{NoiseSpec::Kind::Stripe, {0.08}}};
  opt.stable_runtime = true;
  opt.report_path = "bench_test_report.csv";
  opt.summary_path = "bench_test_summary.csv";

  run_bench(pipeline, opt);
  auto report1 = slurp(opt.report_path);
  auto summary1 = slurp(opt.summary_path);
  run_bench(pipeline, opt);
  CHECK(slurp(opt.report_path) == report1);
  CHECK(slurp(opt.summary_path) == summary1);

  CHECK(report1.rfind("pair_id,noise_type,noise_level,ncm,sr,rmse,rt_s\n",
                      0) == 0);
  CHECK(summary1.rfind(
            "noise_type,noise_level,mean_ncm,sr,mean_rmse,mean_rt_s,acr\n",
            0) == 0);
  std::remove(opt.report_path.c_str());
  std::remove(opt.summary_path.c_str());
}

TEST_CASE("bench rejects an empty pair budget") {
  ParamStore params(3);
  Pipeline pipeline(params, tiny());
  BenchOptions opt;
  opt.synthetic_pairs = 0;
  CHECK_THROWS_AS(run_bench(pipeline, opt), std::invalid_argument);
}

TEST_CASE("selftest passes") {
  std::stringstream out;
  CHECK(run_selftest(out) == 0);
  CHECK(out.str().find("FAIL") == std::string::npos);
  CHECK(out.str().find("all checks passed") != std::string::npos);
}
