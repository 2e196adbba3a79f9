#pragma once

#include <utility>

#include "nmatch/tensor.hpp"
#include "nmatch/weights.hpp"

namespace nmatch {

// Sinusoidal encoding evaluated at rescaled coordinates so grids of
// different test resolutions line up with the training grid.
struct PositionalEncodingSpec {
  int d = 0;  // encoding dimension, divisible by 4
  double train_w = 1, train_h = 1;
  double test_w = 1, test_h = 1;

  double mu() const { return train_w / test_w; }
  double nu() const { return train_h / test_h; }
};

// Component 4k is sin(w_k x), 4k+1 cos(w_k x), 4k+2 sin(w_k y),
// 4k+3 cos(w_k y), with w_k = 1/10000^{2k/d}.
std::vector<double> positional_encoding(double x, double y,
                                        const PositionalEncodingSpec& spec);

// Adds the encoding evaluated at (x*mu, y*nu) to an [h,w,d] feature map,
// x being the column index and y the row index.
Tensor npe(const Tensor& features, const PositionalEncodingSpec& spec);
// Plain encoding addition at unscaled (x, y).
Tensor absolute_pe(const Tensor& features, const PositionalEncodingSpec& spec);

// Kernelized attention with phi(x) = elu(x)+1: rows of the output are
// phi(Q)(phi(K)^T V) normalized by phi(Q)(phi(K)^T 1). Cost is linear in the
// token counts.
Tensor linear_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Alternating self-/cross-attention stack over two token sets. Weights are
// shared between the two sets, so the operator is symmetric under swapping
// its arguments.
class FeFormer {
 public:
  FeFormer(ParamStore& params, std::string prefix, int channels, int layers,
           int heads = 8);

  // fa: [N,C], fb: [N',C]; both already position-encoded
  std::pair<Tensor, Tensor> enhance(const Tensor& fa, const Tensor& fb) const;

  int layers() const { return layers_; }

 private:
  Tensor attention(const Tensor& q_tokens, const Tensor& kv_tokens,
                   const std::string& tag) const;
  Tensor ffn(const Tensor& x, const std::string& tag) const;

  ParamStore& params_;
  std::string prefix_;
  int channels_, layers_, heads_;
};

}  // namespace nmatch
