#include "nmatch/backbone.hpp"

#include <stdexcept>

namespace nmatch {

Tensor image_to_tensor(const Image& image) {
  Tensor t({image.height, image.width, 1});
  t.data() = image.pixels;
  return t;
}

Backbone::Backbone(ParamStore& params, BackboneConfig config)
    : params_(params), config_(config) {
  int cc = config_.c_coarse, cf = config_.c_fine;
  if (cc % 4 != 0)
    throw std::invalid_argument("coarse channel count must be divisible by 4");
  int c1 = cc / 4, c2 = cc / 2;

  auto conv = [&](const std::string& name, int k, int cin, int cout) {
    params_.create("backbone." + name + ".w", {k, k, cin, cout}, k * k * cin,
                   k * k * cout);
    params_.create_zeros("backbone." + name + ".b", {cout});
    params_.create_const("backbone." + name + ".gamma", {cout}, 1.0);
    params_.create_zeros("backbone." + name + ".beta", {cout});
  };
  conv("l1a", 3, 1, c1);
  conv("l1b", 3, c1, c1);
  conv("l2", 3, c1, c2);
  conv("l3a", 3, c2, cc);
  conv("l3b", 3, cc, cc);
  conv("l3c", 3, cc, cc);
  params_.create("backbone.coarse_out.w", {3, 3, cc, cc}, 9 * cc, 9 * cc);
  params_.create_zeros("backbone.coarse_out.b", {cc});
  params_.create("backbone.fine_proj.w", {1, 1, cc, c2}, cc, c2);
  params_.create_zeros("backbone.fine_proj.b", {c2});
  params_.create("backbone.fine_out.w", {3, 3, c2, cf}, 9 * c2, 9 * cf);
  params_.create_zeros("backbone.fine_out.b", {cf});

  for (int k : {1, 3, 5, 7}) {
    std::string tag = "backbone.fpm.k" + std::to_string(k);
    params_.create(tag + ".dw", {k, k, cc, 1}, k * k, k * k);
    params_.create(tag + ".pw", {1, 1, cc, cc / 4}, cc, cc / 4);
    params_.create_zeros(tag + ".b", {cc / 4});
  }
}

Tensor Backbone::conv_block(const Tensor& x, const std::string& name,
                            int stride) const {
  auto w = params_.get("backbone." + name + ".w");
  auto b = params_.get("backbone." + name + ".b");
  auto gamma = params_.get("backbone." + name + ".gamma");
  auto beta = params_.get("backbone." + name + ".beta");
  auto y = conv2d(x, w, stride, Padding::Same);
  int h = y.extent(0), wd = y.extent(1), c = y.extent(2);
  auto flat = add_cols(reshape(y, {h * wd, c}), b);
  auto normed = instance_norm(reshape(flat, {h, wd, c}), gamma, beta);
  return relu(normed);
}

PyramidFeatures Backbone::extract(const Image& image) const {
  return extract(image_to_tensor(image));
}

PyramidFeatures Backbone::extract(const Tensor& x) const {
  if (x.rank() != 3 || x.extent(2) != 1)
    throw std::invalid_argument("backbone expects an [H,W,1] tensor");
  int h = x.extent(0), w = x.extent(1);
  if (h % 8 != 0 || w % 8 != 0)
    throw std::invalid_argument("image extents must be multiples of 8, got " +
                                shape_str(x.shape()));

  auto l1 = conv_block(conv_block(x, "l1a", 1), "l1b", 1);  // H, c/4
  auto l2 = conv_block(l1, "l2", 2);                        // H/2, c/2
  auto l3a = conv_block(l2, "l3a", 2);                      // H/4, c
  auto l3b = conv_block(l3a, "l3b", 2);                     // H/8, c
  auto l3c = conv_block(l3b, "l3c", 1);                     // H/8, c

  PyramidFeatures out;
  {
    auto cw = params_.get("backbone.coarse_out.w");
    auto cb = params_.get("backbone.coarse_out.b");
    auto y = conv2d(l3c, cw, 1, Padding::Same);
    int ch = y.extent(0), cww = y.extent(1), cc = y.extent(2);
    out.coarse = reshape(add_cols(reshape(y, {ch * cww, cc}), cb),
                         {ch, cww, cc});
  }
  {
    auto up = upsample2x_bilinear(l3a);  // H/2, c
    auto pw = params_.get("backbone.fine_proj.w");
    auto pb = params_.get("backbone.fine_proj.b");
    auto proj = conv2d(up, pw, 1, Padding::Same);
    int fh = proj.extent(0), fw = proj.extent(1), c2 = proj.extent(2);
    auto fused = add(reshape(add_cols(reshape(proj, {fh * fw, c2}), pb),
                             {fh, fw, c2}),
                     l2);
    auto fwk = params_.get("backbone.fine_out.w");
    auto fb = params_.get("backbone.fine_out.b");
    auto y = conv2d(fused, fwk, 1, Padding::Same);
    int cf = y.extent(2);
    out.fine = reshape(add_cols(reshape(y, {fh * fw, cf}), fb), {fh, fw, cf});
  }
  return out;
}

Tensor Backbone::preprocess(const Tensor& coarse) const {
  if (coarse.rank() != 3)
    throw std::invalid_argument("preprocess expects an [h,w,c] tensor");
  int c = coarse.extent(2);
  if (c % 4 != 0)
    throw std::invalid_argument("channel count must be divisible by 4");
  if (c != config_.c_coarse)
    throw std::invalid_argument("channel count does not match the model");
  std::vector<Tensor> branches;
  for (int k : {1, 3, 5, 7}) {
    std::string tag = "backbone.fpm.k" + std::to_string(k);
    auto dw = conv2d(coarse, params_.get(tag + ".dw"), 1, Padding::Same, true);
    auto pw = conv2d(dw, params_.get(tag + ".pw"), 1, Padding::Same);
    int h = pw.extent(0), w = pw.extent(1), cb = pw.extent(2);
    branches.push_back(reshape(
        add_cols(reshape(pw, {h * w, cb}), params_.get(tag + ".b")),
        {h, w, cb}));
  }
  return concat_last(branches);
}

}  // namespace nmatch
