#include "casunext/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "blas_gemm.hpp"

namespace casunext {

namespace {

std::size_t shape_numel(std::span<const int> shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw std::invalid_argument("tensor: non-positive dimension in shape " +
                                  shape_to_string(shape));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

detail::ImplPtr make_impl(std::vector<int> shape, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  std::size_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->data.assign(n, 0.0);
  impl->requires_grad = requires_grad;
  return impl;
}

thread_local GradTape* g_active_tape = nullptr;

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// ---- broadcasting over singleton axes, trailing-aligned, rank <= 4 ----

struct BcastPlan {
  std::array<int, 4> odims{1, 1, 1, 1};
  std::array<std::size_t, 4> astr{0, 0, 0, 0};
  std::array<std::size_t, 4> bstr{0, 0, 0, 0};
  std::vector<int> out_shape;
  bool same_shape = false;
};

BcastPlan make_bcast_plan(const char* op, const std::vector<int>& a,
                          const std::vector<int>& b) {
  if (a.size() > 4 || b.size() > 4) {
    throw std::invalid_argument(std::string(op) +
                                ": rank > 4 not supported (shapes " +
                                shape_to_string(a) + ", " +
                                shape_to_string(b) + ")");
  }
  BcastPlan p;
  if (a == b) {
    p.same_shape = true;
    p.out_shape = a;
    return p;
  }
  std::array<int, 4> ad{1, 1, 1, 1};
  std::array<int, 4> bd{1, 1, 1, 1};
  for (std::size_t i = 0; i < a.size(); ++i) ad[4 - a.size() + i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) bd[4 - b.size() + i] = b[i];
  for (int i = 0; i < 4; ++i) {
    if (ad[i] != bd[i] && ad[i] != 1 && bd[i] != 1) {
      throw std::invalid_argument(std::string(op) + ": shapes " +
                                  shape_to_string(a) + " and " +
                                  shape_to_string(b) +
                                  " are not broadcast-compatible");
    }
    p.odims[i] = std::max(ad[i], bd[i]);
  }
  std::size_t as = 1, bs = 1;
  for (int i = 3; i >= 0; --i) {
    p.astr[i] = (ad[i] == 1) ? 0 : as;
    p.bstr[i] = (bd[i] == 1) ? 0 : bs;
    as *= static_cast<std::size_t>(ad[i]);
    bs *= static_cast<std::size_t>(bd[i]);
  }
  std::size_t out_rank = std::max(a.size(), b.size());
  p.out_shape.assign(p.odims.begin() + (4 - out_rank), p.odims.end());
  return p;
}

// f(out_index, a_index, b_index), row-major over the output.
template <class F>
void for_each_bcast(const BcastPlan& p, F&& f) {
  std::size_t o = 0;
  for (int i0 = 0; i0 < p.odims[0]; ++i0)
    for (int i1 = 0; i1 < p.odims[1]; ++i1)
      for (int i2 = 0; i2 < p.odims[2]; ++i2) {
        std::size_t ia = i0 * p.astr[0] + i1 * p.astr[1] + i2 * p.astr[2];
        std::size_t ib = i0 * p.bstr[0] + i1 * p.bstr[1] + i2 * p.bstr[2];
        for (int i3 = 0; i3 < p.odims[3]; ++i3) {
          f(o++, ia, ib);
          ia += p.astr[3];
          ib += p.bstr[3];
        }
      }
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary_op(const char* name, BinOp op, const Tensor& a,
                 const Tensor& b) {
  BcastPlan plan = make_bcast_plan(name, a.shape(), b.shape());
  Tensor out = Tensor::zeros(plan.out_shape);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  if (plan.same_shape) {
    std::size_t n = out.size();
    switch (op) {
      case BinOp::Add:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
        break;
      case BinOp::Sub:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
        break;
      case BinOp::Mul:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
        break;
      case BinOp::Div:
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
        break;
    }
  } else {
    switch (op) {
      case BinOp::Add:
        for_each_bcast(plan, [&](std::size_t o, std::size_t ia,
                                 std::size_t ib) { po[o] = pa[ia] + pb[ib]; });
        break;
      case BinOp::Sub:
        for_each_bcast(plan, [&](std::size_t o, std::size_t ia,
                                 std::size_t ib) { po[o] = pa[ia] - pb[ib]; });
        break;
      case BinOp::Mul:
        for_each_bcast(plan, [&](std::size_t o, std::size_t ia,
                                 std::size_t ib) { po[o] = pa[ia] * pb[ib]; });
        break;
      case BinOp::Div:
        for_each_bcast(plan, [&](std::size_t o, std::size_t ia,
                                 std::size_t ib) { po[o] = pa[ia] / pb[ib]; });
        break;
    }
  }

  if (should_record({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    bool need_a = a.requires_grad();
    bool need_b = b.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      if (need_a) ai->ensure_grad();
      if (need_b) bi->ensure_grad();
      double* ga = need_a ? ai->grad.data() : nullptr;
      double* gb = need_b ? bi->grad.data() : nullptr;
      const double* va = ai->data.data();
      const double* vb = bi->data.data();
      auto run = [&](auto&& fa, auto&& fb) {
        if (plan.same_shape) {
          std::size_t n = oi->size();
          for (std::size_t i = 0; i < n; ++i) {
            if (ga) ga[i] += fa(g[i], va[i], vb[i]);
            if (gb) gb[i] += fb(g[i], va[i], vb[i]);
          }
        } else {
          for_each_bcast(plan,
                         [&](std::size_t o, std::size_t ia, std::size_t ib) {
                           if (ga) ga[ia] += fa(g[o], va[ia], vb[ib]);
                           if (gb) gb[ib] += fb(g[o], va[ia], vb[ib]);
                         });
        }
      };
      switch (op) {
        case BinOp::Add:
          run([](double gi, double, double) { return gi; },
              [](double gi, double, double) { return gi; });
          break;
        case BinOp::Sub:
          run([](double gi, double, double) { return gi; },
              [](double gi, double, double) { return -gi; });
          break;
        case BinOp::Mul:
          run([](double gi, double, double y) { return gi * y; },
              [](double gi, double x, double) { return gi * x; });
          break;
        case BinOp::Div:
          run([](double gi, double, double y) { return gi / y; },
              [](double gi, double x, double y) { return -gi * x / (y * y); });
          break;
      }
    });
  }
  return out;
}

enum class UnaryOp { Sigmoid, Tanh, Relu, Softplus };

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor unary_op(UnaryOp op, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  std::size_t n = x.size();
  switch (op) {
    case UnaryOp::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) po[i] = stable_sigmoid(px[i]);
      break;
    case UnaryOp::Tanh:
      for (std::size_t i = 0; i < n; ++i) po[i] = std::tanh(px[i]);
      break;
    case UnaryOp::Relu:
      for (std::size_t i = 0; i < n; ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
      break;
    case UnaryOp::Softplus:
      // max(x,0) + log1p(exp(-|x|)), stable at both tails
      for (std::size_t i = 0; i < n; ++i) {
        double v = px[i];
        po[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
      }
      break;
  }
  if (should_record({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      const double* g = oi->grad.data();
      const double* y = oi->data.data();
      const double* v = xi->data.data();
      double* gx = xi->grad.data();
      std::size_t m = oi->size();
      switch (op) {
        case UnaryOp::Sigmoid:
          for (std::size_t i = 0; i < m; ++i)
            gx[i] += g[i] * y[i] * (1.0 - y[i]);
          break;
        case UnaryOp::Tanh:
          for (std::size_t i = 0; i < m; ++i)
            gx[i] += g[i] * (1.0 - y[i] * y[i]);
          break;
        case UnaryOp::Relu:
          for (std::size_t i = 0; i < m; ++i)
            gx[i] += v[i] > 0.0 ? g[i] : 0.0;
          break;
        case UnaryOp::Softplus:
          for (std::size_t i = 0; i < m; ++i)
            gx[i] += g[i] * stable_sigmoid(v[i]);
          break;
      }
    });
  }
  return out;
}

void check_nchw(const char* op, const Tensor& t) {
  if (t.rank() != 4) {
    throw std::invalid_argument(std::string(op) +
                                ": expected a 4-d NxCxHxW tensor, got shape " +
                                shape_to_string(t.shape()));
  }
}

}  // namespace

std::string shape_to_string(std::span<const int> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// ---- factories ----

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  std::size_t n = shape_numel(shape);
  if (n != data.size()) {
    throw std::invalid_argument(
        "tensor: shape " + shape_to_string(shape) + " expects " +
        std::to_string(n) + " elements, got " + std::to_string(data.size()));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::uniform(std::vector<int> shape, SplitRng& rng, double lo,
                       double hi, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.impl_->data) v = rng.uniform(lo, hi);
  return t;
}

Tensor wrap_impl(detail::ImplPtr impl) { return Tensor(std::move(impl)); }

Tensor zeros_like(const Tensor& t) { return Tensor::zeros(t.shape()); }
Tensor ones_like(const Tensor& t) { return Tensor::full(t.shape(), 1.0); }

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item: tensor is not a scalar, shape " +
                                shape_to_string(shape()));
  }
  return impl_->data[0];
}

namespace {
std::size_t flat_index(const detail::TensorImpl& impl,
                       std::initializer_list<int> idx) {
  if (idx.size() != impl.shape.size()) {
    throw std::invalid_argument("at: index rank mismatch for shape " +
                                shape_to_string(impl.shape));
  }
  std::size_t off = 0;
  std::size_t i = 0;
  for (int v : idx) {
    if (v < 0 || v >= impl.shape[i]) {
      throw std::out_of_range("at: index out of range for shape " +
                              shape_to_string(impl.shape));
    }
    off = off * static_cast<std::size_t>(impl.shape[i]) +
          static_cast<std::size_t>(v);
    ++i;
  }
  return off;
}
}  // namespace

double Tensor::at(std::initializer_list<int> idx) const {
  return impl_->data[flat_index(*impl_, idx)];
}

double& Tensor::at(std::initializer_list<int> idx) {
  return impl_->data[flat_index(*impl_, idx)];
}

// ---- tape ----

GradTape::GradTape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

GradTape::~GradTape() { g_active_tape = prev_; }

GradTape* GradTape::active() { return g_active_tape; }

void GradTape::record(std::function<void()> backward_fn) {
  records_.push_back(std::move(backward_fn));
}

void GradTape::backward(const Tensor& loss) {
  if (consumed_) {
    throw std::runtime_error(
        "backward: tape already consumed; start a new tape before the next "
        "backward pass");
  }
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_to_string(loss.shape()));
  }
  consumed_ = true;
  loss.impl()->ensure_grad();
  loss.impl()->grad[0] = 1.0;
  // Reverse replay; each record is released right after it runs so that
  // intermediate activations are freed as the pass walks back.
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    (*it)();
    *it = nullptr;
  }
  records_.clear();
}

void backward(const Tensor& loss) {
  GradTape* t = GradTape::active();
  if (t == nullptr) {
    throw std::runtime_error("backward: no active GradTape");
  }
  t->backward(loss);
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op("add", BinOp::Add, a, b);
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op("sub", BinOp::Sub, a, b);
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op("mul", BinOp::Mul, a, b);
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op("div", BinOp::Div, a, b);
}

Tensor scale(const Tensor& x, double k) {
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] * k;
  if (should_record({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      for (std::size_t i = 0; i < oi->size(); ++i)
        xi->grad[i] += k * oi->grad[i];
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& x, double k) {
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] + k;
  if (should_record({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      for (std::size_t i = 0; i < oi->size(); ++i) xi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

// ---- matmul ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul: expected 2-d tensors, got shapes " +
                                shape_to_string(a.shape()) + " and " +
                                shape_to_string(b.shape()));
  }
  int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) {
    throw std::invalid_argument(
        "matmul: inner dimensions differ, shapes " +
        shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  detail::gemm(CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a.data().data(), k,
               b.data().data(), n, 0.0, out.data().data(), n);
  if (should_record({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    bool need_a = a.requires_grad();
    bool need_b = b.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      if (need_a) {
        ai->ensure_grad();
        // dA += G * B^T
        detail::gemm(CblasNoTrans, CblasTrans, m, k, n, 1.0, g, n,
                     bi->data.data(), n, 1.0, ai->grad.data(), k);
      }
      if (need_b) {
        bi->ensure_grad();
        // dB += A^T * G
        detail::gemm(CblasTrans, CblasNoTrans, k, n, m, 1.0, ai->data.data(),
                     k, g, n, 1.0, bi->grad.data(), n);
      }
    });
  }
  return out;
}

// ---- activations ----

Tensor sigmoid(const Tensor& x) { return unary_op(UnaryOp::Sigmoid, x); }
Tensor tanh(const Tensor& x) { return unary_op(UnaryOp::Tanh, x); }
Tensor relu(const Tensor& x) { return unary_op(UnaryOp::Relu, x); }
Tensor softplus(const Tensor& x) { return unary_op(UnaryOp::Softplus, x); }

// ---- reductions ----

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::from_data({1}, {s});
  if (should_record({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      double g = oi->grad[0];
      for (double& v : xi->grad) v += g;
    });
  }
  return out;
}

// ---- channel concat / slice ----

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("concat_channels: no inputs");
  }
  for (const Tensor& t : parts) check_nchw("concat_channels", t);
  int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  int c_total = 0;
  for (const Tensor& t : parts) {
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w) {
      throw std::invalid_argument(
          "concat_channels: incompatible shapes " +
          shape_to_string(parts[0].shape()) + " and " +
          shape_to_string(t.shape()));
    }
    c_total += t.dim(1);
  }
  Tensor out = Tensor::zeros({n, c_total, h, w});
  std::size_t plane = static_cast<std::size_t>(h) * w;
  std::size_t out_sample = static_cast<std::size_t>(c_total) * plane;
  double* po = out.data().data();
  std::size_t c_off = 0;
  for (const Tensor& t : parts) {
    std::size_t part_sample = static_cast<std::size_t>(t.dim(1)) * plane;
    const double* pt = t.data().data();
    for (int i = 0; i < n; ++i) {
      std::memcpy(po + i * out_sample + c_off * plane, pt + i * part_sample,
                  part_sample * sizeof(double));
    }
    c_off += static_cast<std::size_t>(t.dim(1));
  }

  bool any_grad = false;
  for (const Tensor& t : parts) any_grad |= t.requires_grad();
  if (g_active_tape != nullptr && any_grad) {
    out.set_requires_grad(true);
    std::vector<detail::ImplPtr> impls;
    std::vector<bool> needs;
    impls.reserve(parts.size());
    for (const Tensor& t : parts) {
      impls.push_back(t.impl());
      needs.push_back(t.requires_grad());
    }
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      std::size_t off = 0;
      for (std::size_t p = 0; p < impls.size(); ++p) {
        std::size_t part_c = static_cast<std::size_t>(impls[p]->shape[1]);
        std::size_t part_sample = part_c * plane;
        if (needs[p]) {
          impls[p]->ensure_grad();
          double* gp = impls[p]->grad.data();
          for (int i = 0; i < n; ++i) {
            const double* src = g + i * out_sample + off * plane;
            double* dst = gp + i * part_sample;
            for (std::size_t j = 0; j < part_sample; ++j) dst[j] += src[j];
          }
        }
        off += part_c;
      }
    });
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  std::array<Tensor, 2> parts{a, b};
  return concat_channels(std::span<const Tensor>(parts));
}

Tensor narrow_channels(const Tensor& x, int start, int len) {
  check_nchw("narrow_channels", x);
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (start < 0 || len <= 0 || start + len > c) {
    throw std::invalid_argument(
        "narrow_channels: range [" + std::to_string(start) + "," +
        std::to_string(start + len) + ") invalid for shape " +
        shape_to_string(x.shape()));
  }
  Tensor out = Tensor::zeros({n, len, h, w});
  std::size_t plane = static_cast<std::size_t>(h) * w;
  std::size_t in_sample = static_cast<std::size_t>(c) * plane;
  std::size_t out_sample = static_cast<std::size_t>(len) * plane;
  const double* px = x.data().data();
  double* po = out.data().data();
  for (int i = 0; i < n; ++i) {
    std::memcpy(po + i * out_sample, px + i * in_sample + start * plane,
                out_sample * sizeof(double));
  }
  if (should_record({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      const double* g = oi->grad.data();
      double* gx = xi->grad.data();
      for (int i = 0; i < n; ++i) {
        const double* src = g + i * out_sample;
        double* dst = gx + i * in_sample + start * plane;
        for (std::size_t j = 0; j < out_sample; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

// ---- serialization ----

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("save_tensor: cannot open " + path);
  }
  f << "shape:";
  for (int d : t.shape()) f << ' ' << d;
  f << '\n';
  // x86 doubles are already little-endian; written verbatim.
  f.write(reinterpret_cast<const char*>(t.data().data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!f) {
    throw std::runtime_error("save_tensor: write failed for " + path);
  }
}

Tensor load_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("load_tensor: cannot open " + path);
  }
  std::string header;
  if (!std::getline(f, header) || header.rfind("shape:", 0) != 0) {
    throw std::runtime_error("load_tensor: bad header in " + path);
  }
  std::istringstream hs(header.substr(6));
  std::vector<int> shape;
  int d;
  while (hs >> d) shape.push_back(d);
  if (shape.empty()) {
    throw std::runtime_error("load_tensor: empty shape in " + path);
  }
  std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
    throw std::runtime_error("load_tensor: truncated data in " + path);
  }
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace casunext
