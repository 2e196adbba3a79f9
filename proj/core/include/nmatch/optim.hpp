#pragma once

#include <functional>

#include "nmatch/tensor.hpp"

namespace nmatch {

// Adam over an explicit parameter list. Moment buffers are keyed by position,
// so the parameter list must be stable across steps.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Max elementwise relative error between the autodiff gradient of f at x and
// central finite differences with step eps. f must return a scalar tensor.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps = 1e-5);

}  // namespace nmatch
