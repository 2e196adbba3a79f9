#pragma once

#include "nmatch/image.hpp"
#include "nmatch/tensor.hpp"
#include "nmatch/weights.hpp"

namespace nmatch {

// Backbone outputs: coarse at 1/8 input resolution, fine at 1/2.
struct PyramidFeatures {
  Tensor coarse;  // [H/8, W/8, c_coarse]
  Tensor fine;    // [H/2, W/2, c_fine]
};

struct BackboneConfig {
  int c_coarse = 64;
  int c_fine = 32;
};

// Three-level pyramid over a single-channel image. The deep path downsamples
// by 8 for the coarse map; the fine map fuses an upsampled mid-level feature
// with the half-resolution shallow feature.
class Backbone {
 public:
  Backbone(ParamStore& params, BackboneConfig config);

  // H and W must be multiples of 8.
  PyramidFeatures extract(const Image& image) const;
  PyramidFeatures extract(const Tensor& image_hw1) const;

  // Multiscale depthwise preprocessing of the coarse map: four depthwise
  // branches (kernel 1/3/5/7), each compressed to c/4 channels by a 1x1
  // convolution, concatenated back to c channels.
  Tensor preprocess(const Tensor& coarse) const;

  const BackboneConfig& config() const { return config_; }

 private:
  Tensor conv_block(const Tensor& x, const std::string& name, int stride) const;

  ParamStore& params_;
  BackboneConfig config_;
};

Tensor image_to_tensor(const Image& image);

}  // namespace nmatch
