#include "nmatch/pipeline.hpp"

#include <stdexcept>

namespace nmatch {

Pipeline::Pipeline(ParamStore& params, PipelineConfig config)
    : params_(params), config_(config) {
  config_.validate();
  backbone_ = std::make_unique<Backbone>(
      params_, BackboneConfig{config_.c_coarse, config_.c_fine});
  coarse_former_ = std::make_unique<FeFormer>(params_, "feformer.coarse",
                                              config_.c_coarse,
                                              config_.layers_coarse,
                                              config_.heads);
  fine_former_ = std::make_unique<FeFormer>(params_, "feformer.fine",
                                            config_.c_fine, config_.layers_fine,
                                            config_.heads);
  outlier_net_ = std::make_unique<OutlierNet>(params_);
}

CoarseForward Pipeline::forward_coarse(const Image& a, const Image& b) const {
  auto pa = backbone_->extract(a);
  auto pb = backbone_->extract(b);
  Tensor ca = config_.use_fpm ? backbone_->preprocess(pa.coarse) : pa.coarse;
  Tensor cb = config_.use_fpm ? backbone_->preprocess(pb.coarse) : pb.coarse;

  int train_grid = config_.image_size / 8;
  auto encode = [&](const Tensor& c) {
    PositionalEncodingSpec spec;
    spec.d = config_.c_coarse;
    spec.train_w = spec.train_h = train_grid;
    spec.test_h = c.extent(0);
    spec.test_w = c.extent(1);
    return config_.pe_mode == PeMode::Normalized ? npe(c, spec)
                                                 : absolute_pe(c, spec);
  };
  auto ea = encode(ca);
  auto eb = encode(cb);

  CoarseForward out;
  out.grid_h_a = ea.extent(0);
  out.grid_w_a = ea.extent(1);
  out.grid_h_b = eb.extent(0);
  out.grid_w_b = eb.extent(1);
  auto ta = reshape(ea, {out.grid_h_a * out.grid_w_a, config_.c_coarse});
  auto tb = reshape(eb, {out.grid_h_b * out.grid_w_b, config_.c_coarse});
  auto [fa, fb] = coarse_former_->enhance(ta, tb);
  out.p = dual_softmax(score_matrix(fa, fb, config_.tau_score));
  out.fine_a = pa.fine;
  out.fine_b = pb.fine;
  return out;
}

PixelMatchSet Pipeline::match(const Image& a, const Image& b) const {
  NoGradGuard ng;
  auto fwd = forward_coarse(a, b);
  auto coarse = select_coarse(fwd.p, config_.tau_confidence, fwd.grid_h_a,
                              fwd.grid_w_a, fwd.grid_h_b, fwd.grid_w_b);
  auto matches =
      fine_match(coarse, fwd.fine_a, fwd.fine_b, *fine_former_, config_.window);
  return filter_outliers(matches, a.width, a.height);
}

PixelMatchSet Pipeline::filter_outliers(const PixelMatchSet& matches, int width,
                                        int height) const {
  PixelMatchSet kept;
  kept.skipped_border = matches.skipped_border;
  if (config_.outlier_mode == OutlierMode::Learned) {
    if (matches.entries.size() < 2) return matches;
    NoGradGuard ng;
    auto coords = normalize_matches(matches, width, height, std::nullopt);
    auto w = outlier_net_->weights(coords);
    for (size_t i = 0; i < matches.entries.size(); ++i)
      if (w.data()[i] >= OutlierNet::kInlierThreshold)
        kept.entries.push_back(matches.entries[i]);
    return kept;
  }
  if (matches.entries.size() < 4) return matches;
  ConsensusResult result;
  try {
    result = consensus_baseline(matches, 1000, 3.0, config_.seed);
  } catch (const std::domain_error&) {
    return matches;
  }
  for (size_t i = 0; i < matches.entries.size(); ++i)
    if (result.inliers[i]) kept.entries.push_back(matches.entries[i]);
  return kept;
}

}  // namespace nmatch
