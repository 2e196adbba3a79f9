#include "nmatch/enhancer.hpp"

#include <cmath>
#include <stdexcept>

namespace nmatch {

std::vector<double> positional_encoding(double x, double y,
                                        const PositionalEncodingSpec& spec) {
  if (spec.d <= 0 || spec.d % 4 != 0)
    throw std::invalid_argument("encoding dimension must be divisible by 4");
  std::vector<double> out(spec.d);
  for (int k = 0; k * 4 < spec.d; ++k) {
    double omega = std::pow(10000.0, -2.0 * k / spec.d);
    out[4 * k + 0] = std::sin(omega * x);
    out[4 * k + 1] = std::cos(omega * x);
    out[4 * k + 2] = std::sin(omega * y);
    out[4 * k + 3] = std::cos(omega * y);
  }
  return out;
}

namespace {

Tensor add_encoding(const Tensor& features, const PositionalEncodingSpec& spec,
                    double mu, double nu) {
  if (features.rank() != 3)
    throw std::invalid_argument("expected an [h,w,d] feature map");
  int h = features.extent(0), w = features.extent(1), d = features.extent(2);
  if (d != spec.d)
    throw std::invalid_argument("feature channels do not match encoding d");
  if (mu <= 0 || nu <= 0)
    throw std::invalid_argument("encoding scale factors must be positive");
  Tensor field({h, w, d});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto enc = positional_encoding(x * mu, y * nu, spec);
      for (int c = 0; c < d; ++c)
        field.data()[(static_cast<size_t>(y) * w + x) * d + c] = enc[c];
    }
  return add(features, field);
}

}  // namespace

Tensor npe(const Tensor& features, const PositionalEncodingSpec& spec) {
  return add_encoding(features, spec, spec.mu(), spec.nu());
}

Tensor absolute_pe(const Tensor& features, const PositionalEncodingSpec& spec) {
  return add_encoding(features, spec, 1.0, 1.0);
}

Tensor linear_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw std::invalid_argument("linear_attention expects 2-D token matrices");
  if (q.extent(1) != k.extent(1))
    throw std::invalid_argument("query/key width mismatch");
  if (k.extent(0) != v.extent(0))
    throw std::invalid_argument("key/value count mismatch");
  if (k.extent(0) < 1) throw std::invalid_argument("empty key set");
  int n = q.extent(0), m = k.extent(0);

  auto pq = add_scalar(elu(q), 1.0);
  auto pk = add_scalar(elu(k), 1.0);
  auto kv = matmul(transpose(pk), v);          // [d, dv]
  auto num = matmul(pq, kv);                   // [n, dv]
  auto ksum = matmul(transpose(pk), Tensor::full({m, 1}, 1.0));  // [d, 1]
  // tiny additive guard: phi can underflow to exactly zero for very negative
  // activations, and 0/0 must not produce NaN
  auto den = add_scalar(reshape(matmul(pq, ksum), {n}), 1e-30);
  auto inv = div(Tensor::full({n}, 1.0), den);
  return mul_rows(num, inv);
}

FeFormer::FeFormer(ParamStore& params, std::string prefix, int channels,
                   int layers, int heads)
    : params_(params),
      prefix_(std::move(prefix)),
      channels_(channels),
      layers_(layers),
      heads_(heads) {
  if (layers_ < 1) throw std::invalid_argument("layer count must be >= 1");
  if (channels_ % heads_ != 0)
    throw std::invalid_argument("channels must divide evenly into heads");
  int c = channels_;
  for (int l = 0; l < layers_; ++l) {
    for (const char* kind : {"self", "cross"}) {
      std::string tag =
          prefix_ + ".l" + std::to_string(l) + "." + kind;
      for (const char* w : {"wq", "wk", "wv", "wo"})
        params_.create(tag + "." + w, {c, c}, c, c);
      params_.create_zeros(tag + ".bo", {c});
      params_.create(tag + ".ffn.w1", {c, 2 * c}, c, 2 * c);
      params_.create_zeros(tag + ".ffn.b1", {2 * c});
      params_.create(tag + ".ffn.w2", {2 * c, c}, 2 * c, c);
      params_.create_zeros(tag + ".ffn.b2", {c});
    }
  }
}

Tensor FeFormer::attention(const Tensor& q_tokens, const Tensor& kv_tokens,
                           const std::string& tag) const {
  int n = q_tokens.extent(0), m = kv_tokens.extent(0);
  int dh = channels_ / heads_;
  auto q = matmul(q_tokens, params_.get(tag + ".wq"));
  auto k = matmul(kv_tokens, params_.get(tag + ".wk"));
  auto v = matmul(kv_tokens, params_.get(tag + ".wv"));

  auto q3 = reshape(q, {n, heads_, dh});
  auto k3 = reshape(k, {m, heads_, dh});
  auto v3 = reshape(v, {m, heads_, dh});
  std::vector<Tensor> head_out;
  head_out.reserve(heads_);
  for (int h = 0; h < heads_; ++h) {
    auto qh = reshape(crop(q3, 0, h, n, 1), {n, dh});
    auto kh = reshape(crop(k3, 0, h, m, 1), {m, dh});
    auto vh = reshape(crop(v3, 0, h, m, 1), {m, dh});
    head_out.push_back(linear_attention(qh, kh, vh));
  }
  auto merged = concat_last(head_out);  // [n, c]
  auto projected =
      add_cols(matmul(merged, params_.get(tag + ".wo")), params_.get(tag + ".bo"));
  return add(q_tokens, projected);
}

Tensor FeFormer::ffn(const Tensor& x, const std::string& tag) const {
  auto hidden = relu(
      add_cols(matmul(x, params_.get(tag + ".ffn.w1")), params_.get(tag + ".ffn.b1")));
  auto out =
      add_cols(matmul(hidden, params_.get(tag + ".ffn.w2")), params_.get(tag + ".ffn.b2"));
  return add(x, out);
}

std::pair<Tensor, Tensor> FeFormer::enhance(const Tensor& fa,
                                            const Tensor& fb) const {
  if (fa.rank() != 2 || fb.rank() != 2 || fa.extent(1) != channels_ ||
      fb.extent(1) != channels_)
    throw std::invalid_argument("feformer tokens must be [N,c] with model c");
  Tensor a = fa, b = fb;
  for (int l = 0; l < layers_; ++l) {
    std::string self_tag = prefix_ + ".l" + std::to_string(l) + ".self";
    std::string cross_tag = prefix_ + ".l" + std::to_string(l) + ".cross";
    auto sa = ffn(attention(a, a, self_tag), self_tag);
    auto sb = ffn(attention(b, b, self_tag), self_tag);
    auto ca = ffn(attention(sa, sb, cross_tag), cross_tag);
    auto cb = ffn(attention(sb, sa, cross_tag), cross_tag);
    a = ca;
    b = cb;
  }
  return {a, b};
}

}  // namespace nmatch
