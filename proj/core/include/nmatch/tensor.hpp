#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmatch {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // allocated lazily, same length as data
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;
  uint64_t visit_mark = 0;
};

// Dense row-major tensor of doubles with reverse-mode autodiff.
// Copies share the underlying storage (handle semantics).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int size() const { return static_cast<int>(impl_->data.size()); }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int extent(int axis) const { return impl_->shape[axis]; }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  double value() const;  // scalar tensors only

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }
  std::vector<double>& grad();
  void zero_grad();

  // Reverse pass from a scalar root.
  void backward() const;

  void check_finite(const std::string& where) const;

  std::shared_ptr<TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Disables tape recording in scope; inference paths use this to avoid
// building graphs they will never backpropagate through.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor elu(const Tensor& a);
Tensor tanh(const Tensor& a);
// clamp with pass-through gradient outside the clamped region
Tensor clamp(const Tensor& a, double lo, double hi);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// ---- reductions / broadcast ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// column statistics of an [N,C] matrix -> [C]
Tensor col_mean(const Tensor& a);
// broadcast [C] over the rows of [N,C]
Tensor sub_cols(const Tensor& a, const Tensor& m);
Tensor div_cols(const Tensor& a, const Tensor& s);
Tensor mul_cols(const Tensor& a, const Tensor& s);
Tensor add_cols(const Tensor& a, const Tensor& b);  // bias add
// scale row i of [N,C] by w[i]
Tensor mul_rows(const Tensor& a, const Tensor& w);
// L2-norm of each row of [N,C] -> [N]
Tensor row_norm(const Tensor& a);

// softmax along `axis` of a 1-D or 2-D tensor (max-subtraction stabilized)
Tensor softmax(const Tensor& a, int axis = -1);

// ---- shape ----
Tensor reshape(const Tensor& a, Shape shape);
// concatenate along the last axis (channel axis for HWC maps)
Tensor concat_last(const std::vector<Tensor>& parts);
// crop [H,W,C] -> [h,w,C] starting at (y0,x0)
Tensor crop(const Tensor& a, int y0, int x0, int h, int w);
// rows [r0, r0+n) of an [N,C] matrix
Tensor slice_rows(const Tensor& a, int r0, int n);

// ---- conv / resampling ----
enum class Padding { Same, Valid };
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride,
              Padding padding, bool depthwise = false);
Tensor upsample2x_bilinear(const Tensor& input);

// per-channel normalization of [H,W,C] over the spatial extent
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     double eps = 1e-5);

}  // namespace nmatch
