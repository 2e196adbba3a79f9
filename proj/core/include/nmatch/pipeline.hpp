#pragma once

#include <memory>

#include "nmatch/backbone.hpp"
#include "nmatch/config.hpp"
#include "nmatch/enhancer.hpp"
#include "nmatch/matcher.hpp"
#include "nmatch/outlier.hpp"
#include "nmatch/weights.hpp"

namespace nmatch {

// Differentiable coarse-stage output plus the fine maps needed downstream.
struct CoarseForward {
  Tensor p;  // [Na, Nb] match confidences after the two-way softmax
  Tensor fine_a, fine_b;
  int grid_h_a = 0, grid_w_a = 0;
  int grid_h_b = 0, grid_w_b = 0;
};

// Full matcher: pyramid features, multiscale preprocessing, positional
// encoding, attention enhancement, two-stage matching, outlier filtering.
class Pipeline {
 public:
  Pipeline(ParamStore& params, PipelineConfig config);

  // Records gradients when the tape is enabled; training drivers call this.
  CoarseForward forward_coarse(const Image& a, const Image& b) const;

  // Inference: coarse selection, fine refinement, outlier filtering.
  PixelMatchSet match(const Image& a, const Image& b) const;

  // Applies the configured outlier stage; returns the surviving matches.
  PixelMatchSet filter_outliers(const PixelMatchSet& matches, int width,
                                int height) const;

  const PipelineConfig& config() const { return config_; }
  const Backbone& backbone() const { return *backbone_; }
  const FeFormer& coarse_former() const { return *coarse_former_; }
  const FeFormer& fine_former() const { return *fine_former_; }
  const OutlierNet& outlier_net() const { return *outlier_net_; }
  ParamStore& params() const { return params_; }

 private:
  Tensor enhance_tokens(const Tensor& coarse, int grid_h, int grid_w) const;

  ParamStore& params_;
  PipelineConfig config_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<FeFormer> coarse_former_;
  std::unique_ptr<FeFormer> fine_former_;
  std::unique_ptr<OutlierNet> outlier_net_;
};

}  // namespace nmatch
