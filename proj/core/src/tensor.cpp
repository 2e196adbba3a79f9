#include "nmatch/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace nmatch {

int numel(const Shape& s) {
  int n = 1;
  for (int e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, bool requires_grad) {
  for (int e : shape)
    if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data.assign(numel(impl_->shape), 0.0);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel(shape) != static_cast<int>(data.size()))
    throw std::invalid_argument("tensor data length does not match shape " +
                                shape_str(shape));
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::scalar(double v) {
  return Tensor({1}, std::vector<double>{v});
}

double Tensor::value() const {
  if (size() != 1) throw std::domain_error("value() requires a scalar tensor");
  return impl_->data[0];
}

std::vector<double>& Tensor::grad() {
  if (impl_->grad.size() != impl_->data.size())
    impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

void Tensor::check_finite(const std::string& where) const {
  for (double v : impl_->data)
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite value in " + where);
}

namespace {

thread_local int g_no_grad_depth = 0;
uint64_t g_visit_counter = 0;

void topo(const std::shared_ptr<TensorImpl>& node, uint64_t mark,
          std::vector<std::shared_ptr<TensorImpl>>& order) {
  if (node->visit_mark == mark) return;
  node->visit_mark = mark;
  for (auto& p : node->parents) topo(p, mark, order);
  order.push_back(node);
}

std::vector<double>& ensure_grad(TensorImpl& t) {
  if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

void Tensor::backward() const {
  if (size() != 1)
    throw std::domain_error("backward() requires a scalar root");
  std::vector<std::shared_ptr<TensorImpl>> order;
  topo(impl_, ++g_visit_counter, order);
  ensure_grad(*impl_)[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl& n = **it;
    if (n.backward_fn && n.grad.size() == n.data.size()) n.backward_fn(n);
  }
}

namespace {

// Wire up the tape entry for `out` if recording is on and any parent needs it.
void record(Tensor& out, std::vector<Tensor> parents,
            std::function<void(TensorImpl&)> fn) {
  if (!grad_enabled()) return;
  bool any = false;
  for (auto& p : parents) any = any || p.requires_grad();
  if (!any) return;
  out.impl()->requires_grad = true;
  for (auto& p : parents) out.impl()->parents.push_back(p.impl());
  out.impl()->backward_fn = std::move(fn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

}  // namespace

// ---------- elementwise ----------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  const auto& x = a.data();
  const auto& y = b.data();
  auto& z = out.data();
  for (size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  auto ai = a.impl();
  auto bi = b.impl();
  record(out, {a, b}, [ai, bi](TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ensure_grad(*ai);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bi->requires_grad) {
      auto& g = ensure_grad(*bi);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (int i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] - b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  record(out, {a, b}, [ai, bi](TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ensure_grad(*ai);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bi->requires_grad) {
      auto& g = ensure_grad(*bi);
      for (size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (int i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  record(out, {a, b}, [ai, bi](TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ensure_grad(*ai);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bi->data[i];
    }
    if (bi->requires_grad) {
      auto& g = ensure_grad(*bi);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ai->data[i];
    }
  });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  Tensor out(a.shape());
  for (int i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] / b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  record(out, {a, b}, [ai, bi](TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ensure_grad(*ai);
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] / bi->data[i];
    }
    if (bi->requires_grad) {
      auto& g = ensure_grad(*bi);
      for (size_t i = 0; i < g.size(); ++i)
        g[i] -= o.grad[i] * ai->data[i] / (bi->data[i] * bi->data[i]);
    }
  });
  return out;
}

namespace {

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
  Tensor out(a.shape());
  for (int i = 0; i < out.size(); ++i) out.data()[i] = fwd(a.data()[i]);
  auto ai = a.impl();
  record(out, {a}, [ai, bwd](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (size_t i = 0; i < g.size(); ++i)
      g[i] += o.grad[i] * bwd(ai->data[i], o.data[i]);
  });
  return out;
}

}  // namespace

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary_op(
      a, [s](double x) { return x * s; },
      [s](double, double) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor elu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary_op(
      a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---------- linear algebra ----------

namespace {

// c[m,n] += a[m,k] * b[k,n], optional transposes on raw buffers
void mm_acc(const double* a, const double* b, double* c, int m, int k, int n,
            bool ta, bool tb) {
  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      double* ci = c + static_cast<size_t>(i) * n;
      const double* ai = a + static_cast<size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        double av = ai[p];
        if (av == 0.0) continue;
        const double* bp = b + static_cast<size_t>(p) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (ta && !tb) {  // a is [k,m] stored, use a[p,i]
    for (int p = 0; p < k; ++p) {
      const double* ap = a + static_cast<size_t>(p) * m;
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int i = 0; i < m; ++i) {
        double av = ap[i];
        if (av == 0.0) continue;
        double* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (!ta && tb) {  // b is [n,k] stored, use b[j,p]
    for (int i = 0; i < m; ++i) {
      const double* ai = a + static_cast<size_t>(i) * k;
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* bj = b + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] += acc;
      }
    }
  } else {
    throw std::logic_error("mm_acc: double transpose unused");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("matmul requires rank-2 tensors");
  int m = a.extent(0), k = a.extent(1);
  if (b.extent(0) != k)
    throw std::invalid_argument("matmul: inner extents disagree " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  int n = b.extent(1);
  Tensor out({m, n});
  mm_acc(a.data().data(), b.data().data(), out.data().data(), m, k, n, false,
         false);
  auto ai = a.impl();
  auto bi = b.impl();
  record(out, {a, b}, [ai, bi, m, k, n](TensorImpl& o) {
    if (ai->requires_grad)
      mm_acc(o.grad.data(), bi->data.data(), ensure_grad(*ai).data(), m, n, k,
             false, true);
    if (bi->requires_grad)
      mm_acc(ai->data.data(), o.grad.data(), ensure_grad(*bi).data(), k, m, n,
             true, false);
  });
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("transpose requires rank 2");
  int m = a.extent(0), n = a.extent(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data()[j * m + i] = a.data()[i * n + j];
  auto ai = a.impl();
  record(out, {a}, [ai, m, n](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) g[i * n + j] += o.grad[j * m + i];
  });
  return out;
}

// ---------- reductions / broadcast ----------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tensor out({1}, std::vector<double>{s});
  auto ai = a.impl();
  record(out, {a}, [ai](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0];
  });
  return out;
}

Tensor mean(const Tensor& a) { return mul_scalar(sum(a), 1.0 / a.size()); }

Tensor col_mean(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("col_mean requires rank 2");
  int n = a.extent(0), c = a.extent(1);
  Tensor out({c});
  // accumulate each column in sorted order so the result is bitwise
  // independent of the row order (row permutation equivariance downstream)
  std::vector<double> col(n);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < n; ++i) col[i] = a.data()[i * c + j];
    std::sort(col.begin(), col.end());
    double acc = 0.0;
    for (double v : col) acc += v;
    out.data()[j] = acc / n;
  }
  auto ai = a.impl();
  record(out, {a}, [ai, n, c](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) g[i * c + j] += o.grad[j] / n;
  });
  return out;
}

namespace {

enum class ColOp { Sub, Div, Mul, Add };

Tensor col_broadcast(const Tensor& a, const Tensor& v, ColOp op) {
  if (a.rank() != 2 || v.rank() != 1 || v.extent(0) != a.extent(1))
    throw std::invalid_argument("column broadcast: incompatible shapes");
  int n = a.extent(0), c = a.extent(1);
  Tensor out({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      double x = a.data()[i * c + j], y = v.data()[j];
      double r = 0.0;
      switch (op) {
        case ColOp::Sub: r = x - y; break;
        case ColOp::Div: r = x / y; break;
        case ColOp::Mul: r = x * y; break;
        case ColOp::Add: r = x + y; break;
      }
      out.data()[i * c + j] = r;
    }
  auto ai = a.impl();
  auto vi = v.impl();
  record(out, {a, v}, [ai, vi, n, c, op](TensorImpl& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        double go = o.grad[i * c + j];
        double x = ai->data[i * c + j], y = vi->data[j];
        double da = 0.0, dv = 0.0;
        switch (op) {
          case ColOp::Sub: da = go; dv = -go; break;
          case ColOp::Div: da = go / y; dv = -go * x / (y * y); break;
          case ColOp::Mul: da = go * y; dv = go * x; break;
          case ColOp::Add: da = go; dv = go; break;
        }
        if (ai->requires_grad) ensure_grad(*ai)[i * c + j] += da;
        if (vi->requires_grad) ensure_grad(*vi)[j] += dv;
      }
  });
  return out;
}

}  // namespace

Tensor sub_cols(const Tensor& a, const Tensor& m) {
  return col_broadcast(a, m, ColOp::Sub);
}
Tensor div_cols(const Tensor& a, const Tensor& s) {
  return col_broadcast(a, s, ColOp::Div);
}
Tensor mul_cols(const Tensor& a, const Tensor& s) {
  return col_broadcast(a, s, ColOp::Mul);
}
Tensor add_cols(const Tensor& a, const Tensor& b) {
  return col_broadcast(a, b, ColOp::Add);
}

Tensor mul_rows(const Tensor& a, const Tensor& w) {
  if (a.rank() != 2 || w.rank() != 1 || w.extent(0) != a.extent(0))
    throw std::invalid_argument("mul_rows: incompatible shapes");
  int n = a.extent(0), c = a.extent(1);
  Tensor out({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      out.data()[i * c + j] = a.data()[i * c + j] * w.data()[i];
  auto ai = a.impl();
  auto wi = w.impl();
  record(out, {a, w}, [ai, wi, n, c](TensorImpl& o) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) {
        double go = o.grad[i * c + j];
        if (ai->requires_grad)
          ensure_grad(*ai)[i * c + j] += go * wi->data[i];
        acc += go * ai->data[i * c + j];
      }
      if (wi->requires_grad) ensure_grad(*wi)[i] += acc;
    }
  });
  return out;
}

Tensor row_norm(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("row_norm requires rank 2");
  int n = a.extent(0), c = a.extent(1);
  Tensor out({n});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      double v = a.data()[i * c + j];
      s += v * v;
    }
    out.data()[i] = std::sqrt(s);
  }
  auto ai = a.impl();
  record(out, {a}, [ai, n, c](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int i = 0; i < n; ++i) {
      double nrm = o.data[i];
      if (nrm == 0.0) continue;
      double go = o.grad[i] / nrm;
      for (int j = 0; j < c; ++j) g[i * c + j] += go * ai->data[i * c + j];
    }
  });
  return out;
}

Tensor softmax(const Tensor& a, int axis) {
  if (a.rank() == 1) {
    int n = a.extent(0);
    Tensor out({n});
    double mx = *std::max_element(a.data().begin(), a.data().end());
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      out.data()[i] = std::exp(a.data()[i] - mx);
      z += out.data()[i];
    }
    for (int i = 0; i < n; ++i) out.data()[i] /= z;
    auto ai = a.impl();
    record(out, {a}, [ai, n](TensorImpl& o) {
      auto& g = ensure_grad(*ai);
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += o.grad[i] * o.data[i];
      for (int i = 0; i < n; ++i) g[i] += o.data[i] * (o.grad[i] - dot);
    });
    return out;
  }
  if (a.rank() != 2)
    throw std::invalid_argument("softmax supports rank 1 or 2");
  if (axis < 0) axis += 2;
  if (axis != 0 && axis != 1)
    throw std::invalid_argument("softmax: invalid axis");
  int rows = a.extent(0), cols = a.extent(1);
  Tensor out({rows, cols});
  // lane = group of entries that must sum to 1
  int lanes = (axis == 1) ? rows : cols;
  int lane_len = (axis == 1) ? cols : rows;
  auto idx = [axis, cols](int lane, int t) {
    return (axis == 1) ? lane * cols + t : t * cols + lane;
  };
  for (int l = 0; l < lanes; ++l) {
    double mx = -1e300;
    for (int t = 0; t < lane_len; ++t) mx = std::max(mx, a.data()[idx(l, t)]);
    double z = 0.0;
    for (int t = 0; t < lane_len; ++t) {
      double e = std::exp(a.data()[idx(l, t)] - mx);
      out.data()[idx(l, t)] = e;
      z += e;
    }
    for (int t = 0; t < lane_len; ++t) out.data()[idx(l, t)] /= z;
  }
  auto ai = a.impl();
  record(out, {a}, [ai, lanes, lane_len, idx](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int l = 0; l < lanes; ++l) {
      double dot = 0.0;
      for (int t = 0; t < lane_len; ++t)
        dot += o.grad[idx(l, t)] * o.data[idx(l, t)];
      for (int t = 0; t < lane_len; ++t)
        g[idx(l, t)] += o.data[idx(l, t)] * (o.grad[idx(l, t)] - dot);
    }
  });
  return out;
}

// ---------- shape ----------

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out(std::move(shape), a.data());
  auto ai = a.impl();
  record(out, {a}, [ai](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
  return out;
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_last: empty input");
  Shape base = parts[0].shape();
  int last_total = 0;
  for (const auto& p : parts) {
    if (p.rank() != static_cast<int>(base.size()))
      throw std::invalid_argument("concat_last: rank mismatch");
    for (int d = 0; d + 1 < p.rank(); ++d)
      if (p.extent(d) != base[d])
        throw std::invalid_argument("concat_last: leading extents differ");
    last_total += p.extent(p.rank() - 1);
  }
  Shape out_shape = base;
  out_shape.back() = last_total;
  Tensor out(out_shape);
  int outer = numel(out_shape) / last_total;
  int off = 0;
  for (const auto& p : parts) {
    int pc = p.extent(p.rank() - 1);
    for (int i = 0; i < outer; ++i)
      for (int j = 0; j < pc; ++j)
        out.data()[i * last_total + off + j] = p.data()[i * pc + j];
    off += pc;
  }
  std::vector<Tensor> parent_ts = parts;
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (auto& p : parts) impls.push_back(p.impl());
  record(out, parent_ts, [impls, outer, last_total](TensorImpl& o) {
    int off = 0;
    for (auto& pi : impls) {
      int pc = pi->shape.back();
      if (pi->requires_grad) {
        auto& g = ensure_grad(*pi);
        for (int i = 0; i < outer; ++i)
          for (int j = 0; j < pc; ++j)
            g[i * pc + j] += o.grad[i * last_total + off + j];
      }
      off += pc;
    }
  });
  return out;
}

Tensor crop(const Tensor& a, int y0, int x0, int h, int w) {
  if (a.rank() != 3) throw std::invalid_argument("crop requires [H,W,C]");
  int H = a.extent(0), W = a.extent(1), C = a.extent(2);
  if (y0 < 0 || x0 < 0 || y0 + h > H || x0 + w > W)
    throw std::invalid_argument("crop: window out of bounds");
  Tensor out({h, w, C});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c)
        out.data()[(y * w + x) * C + c] =
            a.data()[((y0 + y) * W + (x0 + x)) * C + c];
  auto ai = a.impl();
  record(out, {a}, [ai, y0, x0, h, w, W, C](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < C; ++c)
          g[((y0 + y) * W + (x0 + x)) * C + c] +=
              o.grad[(y * w + x) * C + c];
  });
  return out;
}

Tensor slice_rows(const Tensor& a, int r0, int n) {
  if (a.rank() != 2) throw std::invalid_argument("slice_rows requires rank 2");
  int N = a.extent(0), C = a.extent(1);
  if (r0 < 0 || r0 + n > N)
    throw std::invalid_argument("slice_rows: out of bounds");
  Tensor out({n, C});
  std::copy(a.data().begin() + static_cast<size_t>(r0) * C,
            a.data().begin() + static_cast<size_t>(r0 + n) * C,
            out.data().begin());
  auto ai = a.impl();
  record(out, {a}, [ai, r0, n, C](TensorImpl& o) {
    auto& g = ensure_grad(*ai);
    for (int i = 0; i < n * C; ++i) g[r0 * C + i] += o.grad[i];
  });
  return out;
}

// ---------- conv / resampling ----------

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride,
              Padding padding, bool depthwise) {
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (input.rank() != 3) throw std::invalid_argument("conv2d input [H,W,C]");
  if (kernel.rank() != 4)
    throw std::invalid_argument("conv2d kernel [kh,kw,Cin,Cout]");
  int H = input.extent(0), W = input.extent(1), Cin = input.extent(2);
  int kh = kernel.extent(0), kw = kernel.extent(1);
  int kcin = kernel.extent(2), kcout = kernel.extent(3);
  if (depthwise) {
    if (kcin != Cin || kcout != 1)
      throw std::invalid_argument("depthwise conv kernel must be [kh,kw,C,1]");
  } else if (kcin != Cin) {
    throw std::invalid_argument("conv2d: kernel Cin mismatch");
  }
  int Cout = depthwise ? Cin : kcout;

  int py = 0, px = 0, Ho, Wo;
  if (padding == Padding::Same) {
    if (kh % 2 == 0 || kw % 2 == 0)
      throw std::invalid_argument("same padding requires odd kernel extents");
    Ho = (H + stride - 1) / stride;
    Wo = (W + stride - 1) / stride;
    py = ((Ho - 1) * stride + kh - H) / 2;
    px = ((Wo - 1) * stride + kw - W) / 2;
    if (py < 0) py = 0;
    if (px < 0) px = 0;
  } else {
    if (H < kh || W < kw)
      throw std::invalid_argument("conv2d: input smaller than kernel");
    Ho = (H - kh) / stride + 1;
    Wo = (W - kw) / stride + 1;
  }

  Tensor out({Ho, Wo, Cout});
  const double* in = input.data().data();
  const double* kn = kernel.data().data();
  double* op = out.data().data();
  for (int oy = 0; oy < Ho; ++oy) {
    for (int ox = 0; ox < Wo; ++ox) {
      double* ovec = op + (static_cast<size_t>(oy) * Wo + ox) * Cout;
      for (int dy = 0; dy < kh; ++dy) {
        int iy = oy * stride + dy - py;
        if (iy < 0 || iy >= H) continue;
        for (int dx = 0; dx < kw; ++dx) {
          int ix = ox * stride + dx - px;
          if (ix < 0 || ix >= W) continue;
          const double* ivec = in + (static_cast<size_t>(iy) * W + ix) * Cin;
          const double* kvec =
              kn + (static_cast<size_t>(dy) * kw + dx) * kcin * kcout;
          if (depthwise) {
            for (int c = 0; c < Cin; ++c) ovec[c] += ivec[c] * kvec[c];
          } else {
            for (int ci = 0; ci < Cin; ++ci) {
              double iv = ivec[ci];
              if (iv == 0.0) continue;
              const double* kc = kvec + static_cast<size_t>(ci) * Cout;
              for (int co = 0; co < Cout; ++co) ovec[co] += iv * kc[co];
            }
          }
        }
      }
    }
  }

  auto ii = input.impl();
  auto ki = kernel.impl();
  record(out, {input, kernel},
         [ii, ki, H, W, Cin, kh, kw, kcin, kcout, Cout, Ho, Wo, stride, py, px,
          depthwise](TensorImpl& o) {
           double* ig = ii->requires_grad ? ensure_grad(*ii).data() : nullptr;
           double* kg = ki->requires_grad ? ensure_grad(*ki).data() : nullptr;
           const double* in = ii->data.data();
           const double* kn = ki->data.data();
           for (int oy = 0; oy < Ho; ++oy) {
             for (int ox = 0; ox < Wo; ++ox) {
               const double* gvec =
                   o.grad.data() + (static_cast<size_t>(oy) * Wo + ox) * Cout;
               for (int dy = 0; dy < kh; ++dy) {
                 int iy = oy * stride + dy - py;
                 if (iy < 0 || iy >= H) continue;
                 for (int dx = 0; dx < kw; ++dx) {
                   int ix = ox * stride + dx - px;
                   if (ix < 0 || ix >= W) continue;
                   size_t ioff = (static_cast<size_t>(iy) * W + ix) * Cin;
                   size_t koff =
                       (static_cast<size_t>(dy) * kw + dx) * kcin * kcout;
                   if (depthwise) {
                     for (int c = 0; c < Cin; ++c) {
                       if (ig) ig[ioff + c] += gvec[c] * kn[koff + c];
                       if (kg) kg[koff + c] += gvec[c] * in[ioff + c];
                     }
                   } else {
                     for (int ci = 0; ci < Cin; ++ci) {
                       size_t kc = koff + static_cast<size_t>(ci) * Cout;
                       double iacc = 0.0;
                       for (int co = 0; co < Cout; ++co) {
                         iacc += gvec[co] * kn[kc + co];
                         if (kg) kg[kc + co] += gvec[co] * in[ioff + ci];
                       }
                       if (ig) ig[ioff + ci] += iacc;
                     }
                   }
                 }
               }
             }
           }
         });
  return out;
}

Tensor upsample2x_bilinear(const Tensor& input) {
  if (input.rank() != 3)
    throw std::invalid_argument("upsample2x_bilinear requires [H,W,C]");
  int H = input.extent(0), W = input.extent(1), C = input.extent(2);
  int Ho = 2 * H, Wo = 2 * W;
  Tensor out({Ho, Wo, C});
  // sample positions and weights are shared by forward and backward
  auto taps = [](int o, int n, int& i0, int& i1, double& w1) {
    double src = (o + 0.5) / 2.0 - 0.5;
    double fl = std::floor(src);
    i0 = static_cast<int>(fl);
    i1 = i0 + 1;
    w1 = src - fl;
    if (i0 < 0) i0 = 0;
    if (i1 > n - 1) i1 = n - 1;
  };
  for (int oy = 0; oy < Ho; ++oy) {
    int y0, y1;
    double wy;
    taps(oy, H, y0, y1, wy);
    for (int ox = 0; ox < Wo; ++ox) {
      int x0, x1;
      double wx;
      taps(ox, W, x0, x1, wx);
      for (int c = 0; c < C; ++c) {
        double v00 = input.data()[(y0 * W + x0) * C + c];
        double v01 = input.data()[(y0 * W + x1) * C + c];
        double v10 = input.data()[(y1 * W + x0) * C + c];
        double v11 = input.data()[(y1 * W + x1) * C + c];
        out.data()[(oy * Wo + ox) * C + c] =
            (1 - wy) * ((1 - wx) * v00 + wx * v01) +
            wy * ((1 - wx) * v10 + wx * v11);
      }
    }
  }
  auto ii = input.impl();
  record(out, {input}, [ii, H, W, C, Ho, Wo, taps](TensorImpl& o) {
    auto& g = ensure_grad(*ii);
    for (int oy = 0; oy < Ho; ++oy) {
      int y0, y1;
      double wy;
      taps(oy, H, y0, y1, wy);
      for (int ox = 0; ox < Wo; ++ox) {
        int x0, x1;
        double wx;
        taps(ox, W, x0, x1, wx);
        for (int c = 0; c < C; ++c) {
          double go = o.grad[(oy * Wo + ox) * C + c];
          g[(y0 * W + x0) * C + c] += go * (1 - wy) * (1 - wx);
          g[(y0 * W + x1) * C + c] += go * (1 - wy) * wx;
          g[(y1 * W + x0) * C + c] += go * wy * (1 - wx);
          g[(y1 * W + x1) * C + c] += go * wy * wx;
        }
      }
    }
  });
  return out;
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     double eps) {
  if (x.rank() != 3) throw std::invalid_argument("instance_norm needs [H,W,C]");
  int H = x.extent(0), W = x.extent(1), C = x.extent(2);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
    throw std::invalid_argument("instance_norm: affine params must be [C]");
  Tensor flat = reshape(x, {H * W, C});
  Tensor mu = col_mean(flat);
  Tensor centered = sub_cols(flat, mu);
  Tensor var = col_mean(square(centered));
  Tensor denom = sqrt(add_scalar(var, eps));
  Tensor normed = div_cols(centered, denom);
  Tensor scaled = add_cols(mul_cols(normed, gamma), beta);
  return reshape(scaled, {H, W, C});
}

}  // namespace nmatch
