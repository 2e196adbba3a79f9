#include <CLI11.hpp>
#include <iostream>

#include "nmatch/bench.hpp"
#include "nmatch/config.hpp"
#include "nmatch/image.hpp"
#include "nmatch/matcher.hpp"
#include "nmatch/noise.hpp"
#include "nmatch/pipeline.hpp"
#include "nmatch/selftest.hpp"
#include "nmatch/train.hpp"

using namespace nmatch;

namespace {

PipelineConfig config_from(const std::string& config_path,
                           const std::string& profile) {
  if (!config_path.empty()) return load_config(config_path);
  if (profile == "paper") return PipelineConfig::paper();
  return PipelineConfig::desk();
}

SweepSpec parse_sweep(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--sweep expects kind:level,level,...");
  SweepSpec spec;
  std::string kind = text.substr(0, colon);
  if (kind == "gaussian")
    spec.kind = NoiseSpec::Kind::AdditiveGaussian;
  else if (kind == "stripe")
    spec.kind = NoiseSpec::Kind::Stripe;
  else
    throw CLI::ValidationError("sweep kind must be gaussian or stripe");
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ','))
    spec.levels.push_back(std::stod(item));
  if (spec.levels.empty())
    throw CLI::ValidationError("sweep has no levels");
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust coarse-to-fine image matcher"};
  app.require_subcommand(1);

  // ---- match ----
  auto* match_cmd = app.add_subcommand("match", "Match two PGM images");
  std::string left, right, weights, out_csv, config_path, profile = "desk";
  match_cmd->add_option("--left", left, "query image (PGM)")->required();
  match_cmd->add_option("--right", right, "reference image (PGM)")->required();
  match_cmd->add_option("--weights", weights, "NMW1 weight file");
  match_cmd->add_option("--out", out_csv, "output match CSV")->required();
  match_cmd->add_option("--profile", profile, "desk|paper");
  match_cmd->add_option("--config", config_path, "key = value config file");
  match_cmd->callback([&] {
    auto cfg = config_from(config_path, profile);
    ParamStore params(cfg.seed);
    Pipeline pipeline(params, cfg);
    if (!weights.empty()) params.load(weights);
    std::cout << "parameters: " << params.total_parameters() << "\n";
    auto a = load_pgm(left);
    auto b = load_pgm(right);
    auto matches = pipeline.match(a, b);
    write_match_csv(out_csv, matches);
    std::cout << "matches: " << matches.entries.size()
              << " (skipped at border: " << matches.skipped_border << ")\n";
  });

  // ---- noise ----
  auto* noise_cmd = app.add_subcommand("noise", "Inject noise into a PGM");
  std::string n_in, n_kind, n_out;
  double n_level = 0;
  uint64_t n_seed = 0;
  noise_cmd->add_option("--input", n_in, "input image")->required();
  noise_cmd->add_option("--kind", n_kind, "gaussian|stripe")->required();
  noise_cmd->add_option("--level", n_level, "SNR dB (gaussian) or variance (stripe)")
      ->required();
  noise_cmd->add_option("--seed", n_seed, "noise seed");
  noise_cmd->add_option("--out", n_out, "output image")->required();
  noise_cmd->callback([&] {
    NoiseSpec spec;
    if (n_kind == "gaussian")
      spec.kind = NoiseSpec::Kind::AdditiveGaussian;
    else if (n_kind == "stripe")
      spec.kind = NoiseSpec::Kind::Stripe;
    else
      throw CLI::ValidationError("--kind must be gaussian or stripe");
    spec.level = n_level;
    spec.seed = n_seed;
    save_pgm(n_out, apply_noise(load_pgm(n_in), spec));
  });

  // ---- train-outlier ----
  auto* to_cmd = app.add_subcommand("train-outlier",
                                    "Train the match classifier");
  TrainOutlierOptions to_opt;
  std::string to_log;
  to_cmd->add_option("--seed", to_opt.seed, "training seed");
  to_cmd->add_option("--steps", to_opt.steps, "optimizer steps");
  to_cmd->add_option("--batch", to_opt.batch, "correspondences per step");
  to_cmd->add_option("--lr", to_opt.lr, "learning rate");
  to_cmd->add_option("--out", to_opt.weights_out, "output NMW1 file")
      ->required();
  to_cmd->add_option("--log", to_opt.log_out, "training log CSV");
  to_cmd->callback([&] {
    ParamStore params(to_opt.seed);
    auto log = train_outlier_network(to_opt, params);
    std::cout << "parameters: " << params.total_parameters() << "\n"
              << "final loss: " << log.back().total << "\n";
  });

  // ---- train-matcher ----
  auto* tm_cmd = app.add_subcommand("train-matcher",
                                    "Train backbone + enhancer on synthetic pairs");
  TrainMatcherOptions tm_opt;
  std::string tm_config, tm_profile = "desk";
  tm_cmd->add_option("--seed", tm_opt.seed, "training seed");
  tm_cmd->add_option("--steps", tm_opt.steps, "optimizer steps");
  tm_cmd->add_option("--lr", tm_opt.lr, "learning rate");
  tm_cmd->add_option("--out", tm_opt.weights_out, "output NMW1 file")
      ->required();
  tm_cmd->add_option("--log", tm_opt.log_out, "training log CSV");
  tm_cmd->add_option("--profile", tm_profile, "desk|paper");
  tm_cmd->add_option("--config", tm_config, "key = value config file");
  tm_cmd->callback([&] {
    auto cfg = config_from(tm_config, tm_profile);
    cfg.seed = tm_opt.seed;
    ParamStore params(cfg.seed);
    auto log = train_matcher(tm_opt, cfg, params);
    std::cout << "parameters: " << params.total_parameters() << "\n"
              << "final loss: " << log.back().total << "\n";
  });

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand("bench", "Noise-sweep benchmark");
  BenchOptions b_opt;
  std::string b_weights, b_config, b_profile = "desk";
  std::vector<std::string> b_sweeps;
  bench_cmd->add_option("--synthetic", b_opt.synthetic_pairs,
                        "number of synthetic pairs");
  bench_cmd->add_option("--seed", b_opt.seed, "benchmark seed");
  bench_cmd->add_option("--sweep", b_sweeps,
                        "kind:level,... (repeatable; default both sweeps)");
  bench_cmd->add_option("--weights", b_weights, "NMW1 weight file");
  bench_cmd->add_option("--out", b_opt.report_path, "report CSV")->required();
  bench_cmd->add_option("--summary", b_opt.summary_path,
                        "per-level aggregate CSV");
  bench_cmd->add_option("--profile", b_profile, "desk|paper");
  bench_cmd->add_option("--config", b_config, "key = value config file");
  bench_cmd->add_flag("--stable-rt", b_opt.stable_runtime,
                      "report rt_s as 0 for reproducible output bytes");
  bench_cmd->callback([&] {
    auto cfg = config_from(b_config, b_profile);
    b_opt.image_size = cfg.image_size;
    for (const auto& s : b_sweeps) b_opt.sweeps.push_back(parse_sweep(s));
    if (b_opt.summary_path.empty())
      b_opt.summary_path = b_opt.report_path + ".summary.csv";
    ParamStore params(cfg.seed);
    Pipeline pipeline(params, cfg);
    if (!b_weights.empty()) params.load(b_weights);
    std::cout << "parameters: " << params.total_parameters() << "\n";
    auto report = run_bench(pipeline, b_opt);
    for (const auto& agg : report.aggregates) {
      std::cout << agg.noise_type << " " << agg.noise_level
                << ": mean ncm " << agg.mean_ncm << ", sr " << agg.sr
                << ", mean rmse " << agg.mean_rmse;
      if (agg.acr) std::cout << ", acr " << *agg.acr;
      std::cout << "\n";
    }
  });

  // ---- selftest ----
  auto* self_cmd = app.add_subcommand("selftest", "Run the invariant suite");
  self_cmd->callback([&] {
    if (run_selftest(std::cout) != 0) throw CLI::RuntimeError(1);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
