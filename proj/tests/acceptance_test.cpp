// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails. The slow criteria
// (classifier training, matcher training, noise sweeps) share artifacts.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "nmatch/bench.hpp"
#include "nmatch/losses.hpp"
#include "nmatch/matcher.hpp"
#include "nmatch/metrics.hpp"
#include "nmatch/optim.hpp"
#include "nmatch/outlier.hpp"
#include "nmatch/pipeline.hpp"
#include "nmatch/rng.hpp"
#include "nmatch/selftest.hpp"
#include "nmatch/synth.hpp"
#include "nmatch/train.hpp"

using namespace nmatch;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << "criterion " << id << " (" << name << "): "
            << (ok ? "PASS" : "FAIL");
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor coords_from(const CorrespondenceSet& set) {
  Tensor t({static_cast<int>(set.points.size()), 4});
  for (size_t i = 0; i < set.points.size(); ++i)
    for (int c = 0; c < 4; ++c) t.data()[i * 4 + c] = set.points[i][c];
  return t;
}

// ---- criterion 1: closed-form fidelity ----
bool equation_fidelity(std::string& detail) {
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  bool ok = true;

  Tensor one_cell({1, 1}, std::vector<double>{3.7});
  ok &= near(dual_softmax(one_cell).data()[0], 1.0);
  Tensor equal({2, 2}, {5, 5, 5, 5});
  auto flat = dual_softmax(equal);
  for (double v : flat.data()) ok &= near(v, 0.25);

  Tensor p({2, 2}, {0.9, 0.1, 0.2, 0.8});
  auto sel = select_coarse(p, 0.2, 1, 2, 1, 2);
  ok &= sel.entries.size() == 2 && sel.entries[0].jb == 0 &&
        sel.entries[1].jb == 1;

  auto grid = heatmap_grid(5);
  ok &= near(grid[0], -0.6) && near(grid[1], -0.2) && near(grid[2], 0.2) &&
        near(grid[3], 0.6) && near(grid[4], 1.0);
  Tensor corner = Tensor::zeros({25});
  corner.data()[0] = 1.0;
  auto cs = heatmap_stats(corner, 5);
  ok &= near(cs.offset_x.value() + 0.2, -0.6);
  Tensor center = Tensor::zeros({25});
  center.data()[12] = 1.0;
  auto ctr = heatmap_stats(center, 5);
  ok &= near(ctr.offset_x.value(), 0.0) && near(ctr.offset_y.value(), 0.0);

  Tensor half({1, 1}, std::vector<double>{0.5});
  Tensor one({1, 1}, std::vector<double>{1.0});
  ok &= near(coarse_loss(half, one).value(), std::log(2.0));
  ok &= coarse_loss(one, one).value() <= 1e-5;

  Tensor uniform = Tensor::full({25}, 1.0 / 25);
  ok &= near(fine_loss({uniform}, {{0.0, 0.0}}, 5).loss.value(), 0.0);
  Tensor onehot = Tensor::zeros({25});
  onehot.data()[12] = 1.0;
  double floored = fine_loss({onehot}, {{0.1, 0.0}}, 5).loss.value();
  ok &= std::abs(floored - 0.1 / 1e-6) < 1e-3;  // 1e-9 relative

  Tensor w({1}, std::vector<double>{0.5});
  Tensor lbl({1}, std::vector<double>{1.0});
  ok &= near(classification_loss(w, lbl).value(), std::log(2.0));

  auto set = generate_correspondences(1, 20, 1.0, 0.0);
  Tensor e_gt({3, 3});
  for (int k = 0; k < 9; ++k) e_gt.data()[k] = set.e_gt.m[k];
  ok &= essential_loss(e_gt, set.e_gt, coords_from(set)).loss.value() < 1e-12;

  ok &= near(total_loss(Tensor::scalar(1), Tensor::scalar(1),
                        Tensor::scalar(1), Tensor::scalar(1))
                 .value(),
             2.6);
  auto ratio = acr(434.0, 993.0);
  ok &= ratio && near(*ratio, 434.0 / 993.0) &&
        std::abs(*ratio - 0.437) < 5e-4;
  detail = "closed forms within 1e-9";
  return ok;
}

// ---- criterion 2: gradient suite ----
bool gradient_suite(std::string& detail) {
  Rng rng(21, "acceptance");
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor gt({4, 4});
    for (auto& v : gt.data()) v = rng.below(2);
    Tensor x({4, 4});
    for (auto& v : x.data()) v = rng.uniform(-2, 2);
    auto f = [&](const Tensor& t) {
      auto prob = mul_scalar(add_scalar(tanh(t), 1.0), 0.5);
      return coarse_loss(prob, gt);
    };
    worst = std::max(worst, grad_check(f, x));
  }
  for (int trial = 0; trial < 50; ++trial) {
    Tensor logits({25});
    for (auto& v : logits.data()) v = rng.uniform(-1, 1);
    std::array<double, 2> target = {rng.uniform(-0.5, 0.5),
                                    rng.uniform(-0.5, 0.5)};
    auto f = [&](const Tensor& t) {
      auto z = softmax(reshape(t, {25}));
      return fine_loss({z}, {target}, 5).loss;
    };
    worst = std::max(worst, grad_check(f, logits));
  }
  for (int trial = 0; trial < 50; ++trial) {
    Tensor labels({12});
    for (auto& v : labels.data()) v = rng.below(2);
    Tensor x({12});
    for (auto& v : x.data()) v = rng.uniform(-2, 2);
    auto f = [&](const Tensor& t) {
      auto wt = mul_scalar(add_scalar(tanh(t), 1.0), 0.5);
      return classification_loss(wt, labels);
    };
    worst = std::max(worst, grad_check(f, x));
  }
  for (int trial = 0; trial < 50; ++trial) {
    auto set = generate_correspondences(500 + trial, 16, 0.7, 0.5);
    auto coords = coords_from(set);
    Tensor e({3, 3});
    for (auto& v : e.data()) v = rng.uniform(-1, 1);
    auto f = [&](const Tensor& t) {
      return essential_loss(t, set.e_gt, coords).loss;
    };
    worst = std::max(worst, grad_check(f, e));
  }
  std::ostringstream os;
  os << "max rel err " << worst;
  detail = os.str();
  return worst < 1e-4;
}

// ---- criterion 3: geometry oracle ----
bool geometry_oracle(std::string& detail) {
  NoGradGuard ng;
  Rng rng(31, "acceptance");
  double worst_dist = 0, worst_shift = 0;
  for (int pose = 0; pose < 100; ++pose) {
    auto set = generate_correspondences(2000 + pose, 20, 1.0, 0.0);
    auto coords = coords_from(set);
    auto e = weighted_eight_point(coords, Tensor::full({20}, 1.0));
    Mat3 em = to_mat3(e);
    Mat3 gt = set.e_gt;
    double n = gt.frobenius();
    double dp = 0, dm = 0;
    for (int k = 0; k < 9; ++k) {
      double g = gt.m[k] / n;
      dp += (em.m[k] - g) * (em.m[k] - g);
      dm += (em.m[k] + g) * (em.m[k] + g);
    }
    worst_dist = std::max(worst_dist, std::sqrt(std::min(dp, dm)));

    // gross outliers with exactly zero weight must be inert
    Tensor extended({40, 4});
    std::copy(coords.data().begin(), coords.data().end(),
              extended.data().begin());
    for (int i = 80; i < 160; ++i)
      extended.data()[i] = rng.uniform(-1.2, 1.2);
    Tensor wz({40});
    for (int i = 0; i < 20; ++i) wz.data()[i] = 1.0;
    auto masked = weighted_eight_point(extended, wz);
    for (int k = 0; k < 9; ++k)
      worst_shift =
          std::max(worst_shift, std::abs(masked.data()[k] - e.data()[k]));
  }
  std::ostringstream os;
  os << "max recovery dist " << worst_dist << ", max outlier shift "
     << worst_shift;
  detail = os.str();
  return worst_dist < 1e-6 && worst_shift < 1e-10;
}

// ---- criterion 4: outlier network training ----
bool outlier_training(std::string& detail, const std::string& weights_path) {
  TrainOutlierOptions opt;
  opt.seed = 41;
  opt.steps = 10000;
  opt.weights_out = weights_path;
  std::vector<TrainLogRow> log;
  {
    ParamStore params(opt.seed);
    log = train_outlier_network(opt, params);
  }
  double head = 0, tail = 0;
  for (int i = 0; i < 100; ++i) {
    head += log[i].total;
    tail += log[log.size() - 100 + i].total;
  }
  bool curve_ok = tail < 0.5 * head;

  ParamStore eval_params(0);
  OutlierNet net(eval_params);
  eval_params.load(weights_path);
  NoGradGuard ng;
  long correct = 0, total = 0;
  for (int batch = 0; batch < 200; ++batch) {
    auto set = generate_correspondences(900000 + batch, 50, 0.5, 1.0);
    auto coords = coords_from(set);
    auto w = net.weights(coords);
    for (size_t i = 0; i < set.labels.size(); ++i) {
      int predicted = w.data()[i] >= OutlierNet::kInlierThreshold ? 1 : 0;
      correct += predicted == set.labels[i];
      ++total;
    }
  }
  double accuracy = static_cast<double>(correct) / total;

  // permutation equivariance, bitwise, on the trained net
  bool equivariant = true;
  {
    auto set = generate_correspondences(912345, 32, 0.5, 1.0);
    auto coords = coords_from(set);
    Rng rng(44, "acceptance");
    std::vector<int> perm(32);
    for (int i = 0; i < 32; ++i) perm[i] = i;
    for (int i = 31; i > 0; --i)
      std::swap(perm[i], perm[rng.below(i + 1)]);
    Tensor shuffled({32, 4});
    for (int i = 0; i < 32; ++i)
      for (int c = 0; c < 4; ++c)
        shuffled.data()[i * 4 + c] = coords.data()[perm[i] * 4 + c];
    auto base = net.weights(coords);
    auto permuted = net.weights(shuffled);
    for (int i = 0; i < 32; ++i)
      if (permuted.data()[i] != base.data()[perm[i]]) equivariant = false;
  }

  std::ostringstream os;
  os << "held-out accuracy " << accuracy << ", loss " << head / 100 << " -> "
     << tail / 100 << ", equivariance "
     << (equivariant ? "bitwise" : "violated");
  detail = os.str();
  return accuracy >= 0.90 && curve_ok && equivariant;
}

struct MatchEval {
  double mean_ncm = 0;
  double sr = 0;
};

MatchEval eval_pairs(const Pipeline& pipeline, int n_pairs,
                     uint64_t seed_base) {
  MatchEval out;
  for (int i = 0; i < n_pairs; ++i) {
    auto pair = generate_pair(seed_base + i, pipeline.config().image_size);
    auto m = pipeline.match(pair.imageA, pair.imageB);
    auto r = evaluate_pair(m, pair.h_gt);
    out.mean_ncm += r.ncm;
    out.sr += r.success ? 1 : 0;
  }
  out.mean_ncm /= n_pairs;
  out.sr /= n_pairs;
  return out;
}

// ---- criterion 5: desk matcher training ----
bool matcher_training(std::string& detail, const std::string& matcher_weights,
                      const std::string& outlier_weights,
                      std::vector<TrainLogRow>& log_out) {
  TrainMatcherOptions opt;
  opt.seed = 51;
  opt.steps = 2000;
  opt.weights_out = matcher_weights;
  auto cfg = PipelineConfig::desk();
  {
    ParamStore params(opt.seed);
    log_out = train_matcher(opt, cfg, params);
  }
  double coarse_head = 0, coarse_tail = 0;
  for (int i = 0; i < 100; ++i) {
    coarse_head += log_out[i].coarse;
    coarse_tail += log_out[log_out.size() - 100 + i].coarse;
  }

  ParamStore random_params(opt.seed);
  Pipeline random_pipeline(random_params, cfg);
  auto random_eval = eval_pairs(random_pipeline, 20, 700000);

  ParamStore trained_params(opt.seed);
  Pipeline trained_pipeline(trained_params, cfg);
  trained_params.load(matcher_weights);
  trained_params.load(outlier_weights);
  auto trained_eval = eval_pairs(trained_pipeline, 20, 700000);

  std::ostringstream os;
  os << "ncm " << trained_eval.mean_ncm << " vs random " << random_eval.mean_ncm
     << ", sr " << trained_eval.sr << ", coarse loss " << coarse_head / 100
     << " -> " << coarse_tail / 100;
  detail = os.str();
  bool ratio_ok = trained_eval.mean_ncm >=
                  3.0 * std::max(random_eval.mean_ncm, 1e-12);
  return ratio_ok && trained_eval.sr >= 0.8 && coarse_tail < coarse_head;
}

// ---- criterion 6: noise robustness trend ----
bool noise_trend(std::string& detail, const std::string& matcher_weights,
                 const std::string& outlier_weights) {
  auto cfg = PipelineConfig::desk();
  ParamStore params(cfg.seed);
  Pipeline pipeline(params, cfg);
  params.load(matcher_weights);
  params.load(outlier_weights);

  BenchOptions opt;
  opt.synthetic_pairs = 20;
  opt.image_size = cfg.image_size;
  opt.seed = 61;
  opt.stable_runtime = true;
  auto report = run_bench(pipeline, opt);

  auto sweep_acr = [&](const std::string& kind) {
    std::vector<double> out;
    for (const auto& agg : report.aggregates)
      if (agg.noise_type == kind) out.push_back(agg.acr.value_or(0.0));
    return out;
  };
  auto check_sweep = [](const std::vector<double>& acrs) {
    int inversions = 0;
    for (size_t i = 1; i < acrs.size(); ++i)
      if (acrs[i] > acrs[i - 1] + 1e-12) ++inversions;
    bool spread = acrs.front() >= acrs.back() + 0.1;
    return inversions <= 1 && spread;
  };
  auto g = sweep_acr("gaussian");
  auto s = sweep_acr("stripe");

  std::ostringstream os;
  os << "gaussian acr";
  for (double v : g) os << " " << v;
  os << "; stripe acr";
  for (double v : s) os << " " << v;
  detail = os.str();
  return g.size() == 5 && s.size() == 5 && check_sweep(g) && check_sweep(s);
}

// ---- criterion 7: ablation hooks ----
bool ablation_hooks(std::string& detail) {
  auto run_one = [](PipelineConfig cfg, const std::string& path) {
    ParamStore params(7);
    Pipeline pipeline(params, cfg);
    BenchOptions opt;
    opt.synthetic_pairs = 2;
    opt.image_size = cfg.image_size;
    opt.seed = 71;
    opt.sweeps = {{NoiseSpec::Kind::AdditiveGaussian, {5.0}}};
    opt.stable_runtime = true;
    opt.report_path = path;
    return run_bench(pipeline, opt);
  };
  PipelineConfig tiny;
  tiny.image_size = 64;
  tiny.c_coarse = 16;
  tiny.c_fine = 8;
  tiny.layers_coarse = 1;
  tiny.layers_fine = 1;
  tiny.heads = 4;

  auto base = run_one(tiny, "acceptance_ablate_base.csv");
  auto no_fpm_cfg = tiny;
  no_fpm_cfg.use_fpm = false;
  auto no_fpm = run_one(no_fpm_cfg, "acceptance_ablate_nofpm.csv");
  auto abs_cfg = tiny;
  abs_cfg.pe_mode = PeMode::Absolute;
  auto abs_pe = run_one(abs_cfg, "acceptance_ablate_abspe.csv");
  auto cons_cfg = tiny;
  cons_cfg.outlier_mode = OutlierMode::Consensus;
  auto consensus = run_one(cons_cfg, "acceptance_ablate_consensus.csv");

  bool rows_ok = base.rows.size() == no_fpm.rows.size() &&
                 base.rows.size() == abs_pe.rows.size() &&
                 base.rows.size() == consensus.rows.size();
  bool files_ok = !slurp("acceptance_ablate_base.csv").empty() &&
                  !slurp("acceptance_ablate_nofpm.csv").empty() &&
                  !slurp("acceptance_ablate_abspe.csv").empty() &&
                  !slurp("acceptance_ablate_consensus.csv").empty();
  // config-file reachability of every toggle
  bool config_ok = true;
  try {
    auto parsed = parse_config({{"use_fpm", "off"},
                                {"pe_mode", "absolute"},
                                {"outlier_mode", "consensus"}});
    config_ok = !parsed.use_fpm && parsed.pe_mode == PeMode::Absolute &&
                parsed.outlier_mode == OutlierMode::Consensus;
  } catch (const std::exception&) {
    config_ok = false;
  }
  for (const char* f :
       {"acceptance_ablate_base.csv", "acceptance_ablate_nofpm.csv",
        "acceptance_ablate_abspe.csv", "acceptance_ablate_consensus.csv"})
    std::remove(f);
  detail = "all four variants ran on identical pair sets";
  return rows_ok && files_ok && config_ok;
}

// ---- criterion 8: determinism ----
bool determinism(std::string& detail) {
  std::stringstream s1, s2;
  int f1 = run_selftest(s1);
  int f2 = run_selftest(s2);
  bool selftest_ok = f1 == 0 && f2 == 0 && s1.str() == s2.str();

  PipelineConfig tiny;
  tiny.image_size = 64;
  tiny.c_coarse = 16;
  tiny.c_fine = 8;
  tiny.layers_coarse = 1;
  tiny.layers_fine = 1;
  tiny.heads = 4;
  ParamStore params(8);
  Pipeline pipeline(params, tiny);
  BenchOptions opt;
  opt.synthetic_pairs = 3;
  opt.image_size = 64;
  opt.seed = 81;
  opt.stable_runtime = true;
  opt.report_path = "acceptance_det_report.csv";
  opt.summary_path = "acceptance_det_summary.csv";
  run_bench(pipeline, opt);
  auto r1 = slurp(opt.report_path);
  auto sum1 = slurp(opt.summary_path);
  run_bench(pipeline, opt);
  bool bench_ok = slurp(opt.report_path) == r1 &&
                  slurp(opt.summary_path) == sum1 && !r1.empty();
  std::remove(opt.report_path.c_str());
  std::remove(opt.summary_path.c_str());
  detail = "selftest and bench byte-identical across reruns";
  return selftest_ok && bench_ok;
}

}  // namespace

int main() {
  const std::string outlier_weights = "acceptance_outlier.nmw";
  const std::string matcher_weights = "acceptance_matcher.nmw";
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();

  bool ok = equation_fidelity(detail);
  report(1, "equation fidelity", ok, detail);

  auto t = std::chrono::steady_clock::now();
  ok = gradient_suite(detail);
  report(2, "gradient suite", ok,
         detail + ", " + std::to_string(elapsed_s(t)) + "s");

  t = std::chrono::steady_clock::now();
  ok = geometry_oracle(detail);
  report(3, "geometry oracle", ok,
         detail + ", " + std::to_string(elapsed_s(t)) + "s");

  t = std::chrono::steady_clock::now();
  ok = outlier_training(detail, outlier_weights);
  report(4, "outlier network", ok,
         detail + ", " + std::to_string(elapsed_s(t)) + "s");

  t = std::chrono::steady_clock::now();
  std::vector<TrainLogRow> matcher_log;
  ok = matcher_training(detail, matcher_weights, outlier_weights, matcher_log);
  report(5, "desk matcher", ok,
         detail + ", " + std::to_string(elapsed_s(t)) + "s");

  t = std::chrono::steady_clock::now();
  ok = noise_trend(detail, matcher_weights, outlier_weights);
  report(6, "noise robustness trend", ok,
         detail + ", " + std::to_string(elapsed_s(t)) + "s");

  ok = ablation_hooks(detail);
  report(7, "ablation hooks", ok, detail);

  ok = determinism(detail);
  report(8, "determinism", ok, detail);

  std::remove(outlier_weights.c_str());
  std::remove(matcher_weights.c_str());
  std::cout << "acceptance total: " << elapsed_s(t0) << "s, "
            << (g_failures == 0 ? "ALL PASS"
                                : std::to_string(g_failures) + " FAILED")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
