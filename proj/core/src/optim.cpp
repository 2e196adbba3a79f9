#include "nmatch/optim.hpp"

#include <cmath>

namespace nmatch {

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    auto& g = p.grad();
    auto& m = m_[pi];
    auto& v = v_[pi];
    auto& d = p.data();
    for (size_t i = 0; i < d.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      d[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps) {
  Tensor xv(x.shape(), x.data(), true);
  Tensor y = f(xv);
  if (y.size() != 1)
    throw std::domain_error("grad_check: f must return a scalar");
  y.backward();
  std::vector<double> ga = xv.grad();

  double worst = 0.0;
  NoGradGuard ng;
  for (int i = 0; i < xv.size(); ++i) {
    Tensor xp(x.shape(), x.data());
    Tensor xm(x.shape(), x.data());
    xp.data()[i] += eps;
    xm.data()[i] -= eps;
    double fp = f(xp).value();
    double fm = f(xm).value();
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("grad_check: f not finite near x");
    double gn = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::abs(ga[i]), std::abs(gn), 1e-2});
    worst = std::max(worst, std::abs(ga[i] - gn) / denom);
  }
  return worst;
}

}  // namespace nmatch
