#include "nmatch/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nmatch {

EigenResult jacobi_eigen(const std::vector<double>& a_in, int n,
                         double sym_tol) {
  if (static_cast<int>(a_in.size()) != n * n)
    throw std::invalid_argument("jacobi_eigen: bad matrix size");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(a_in[i * n + j] - a_in[j * n + i]) > sym_tol)
        throw std::domain_error("jacobi_eigen: matrix is not symmetric");

  std::vector<double> a = a_in;
  std::vector<double> v(n * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return s;
  };

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps && off_norm() > 1e-30; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[p * n + p], aqq = a[q * n + q];
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a[i * n + i] < a[j * n + j]; });

  EigenResult res;
  res.values.resize(n);
  res.vectors.assign(n * n, 0.0);
  for (int c = 0; c < n; ++c) {
    res.values[c] = a[order[c] * n + order[c]];
    for (int r = 0; r < n; ++r) res.vectors[r * n + c] = v[r * n + order[c]];
  }
  return res;
}

std::pair<Tensor, Tensor> self_adjoint_eigen(const Tensor& a) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1))
    throw std::invalid_argument("self_adjoint_eigen: square matrix required");
  int n = a.extent(0);
  EigenResult r = jacobi_eigen(a.data(), n);
  return {Tensor({n}, r.values), Tensor({n, n}, r.vectors)};
}

Tensor smallest_eigvec(const Tensor& a) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1))
    throw std::invalid_argument("smallest_eigvec: square matrix required");
  int n = a.extent(0);
  EigenResult r = jacobi_eigen(a.data(), n);

  double sign = 1.0;
  for (int i = 0; i < n; ++i) {
    double vi = r.vectors[i * n + 0];
    if (std::abs(vi) > 1e-12) {
      sign = vi > 0 ? 1.0 : -1.0;
      break;
    }
  }
  Tensor out({n});
  for (int i = 0; i < n; ++i) out.data()[i] = sign * r.vectors[i * n + 0];

  auto ai = a.impl();
  if (grad_enabled() && a.requires_grad()) {
    auto vals = r.values;
    auto vecs = r.vectors;  // unsigned basis
    out.impl()->requires_grad = true;
    out.impl()->parents.push_back(ai);
    out.impl()->backward_fn = [ai, n, vals, vecs, sign](TensorImpl& o) {
      // dA = sym( v0 * (sum_j (vj . g)/(l0 - lj) vj)^T ), g in the signed frame
      if (ai->grad.size() != ai->data.size())
        ai->grad.assign(ai->data.size(), 0.0);
      std::vector<double> coef(n, 0.0);
      for (int j = 1; j < n; ++j) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
          dot += vecs[i * n + j] * (sign * o.grad[i]);
        double gap = vals[0] - vals[j];
        if (std::abs(gap) < 1e-12) continue;  // degenerate pair: no update
        coef[j] = dot / gap;
      }
      std::vector<double> u(n, 0.0);  // sum_j coef_j vj
      for (int i = 0; i < n; ++i)
        for (int j = 1; j < n; ++j) u[i] += coef[j] * vecs[i * n + j];
      for (int r_ = 0; r_ < n; ++r_)
        for (int c_ = 0; c_ < n; ++c_) {
          double d = vecs[r_ * n + 0] * u[c_];
          ai->grad[r_ * n + c_] += 0.5 * d;
          ai->grad[c_ * n + r_] += 0.5 * d;
        }
    };
  }
  return out;
}

}  // namespace nmatch
