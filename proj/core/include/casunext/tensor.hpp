#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "casunext/rng.hpp"

namespace casunext {

class Tensor;

namespace detail {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily during backward
  bool requires_grad = false;

  std::size_t size() const { return data.size(); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

using ImplPtr = std::shared_ptr<TensorImpl>;

}  // namespace detail

std::string shape_to_string(std::span<const int> shape);

/// Dense n-d array of doubles, row-major, with an optional gradient buffer.
/// Copies are shallow: tensors are value handles onto shared storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor uniform(std::vector<int> shape, SplitRng& rng, double lo,
                        double hi, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> grad() { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  /// Value of a single-element tensor.
  double item() const;
  /// Element by multi-index (tests and small utilities; not a hot path).
  double at(std::initializer_list<int> idx) const;
  double& at(std::initializer_list<int> idx);

  detail::ImplPtr impl() const { return impl_; }

 private:
  explicit Tensor(detail::ImplPtr impl) : impl_(std::move(impl)) {}
  detail::ImplPtr impl_;

  friend Tensor wrap_impl(detail::ImplPtr);
};

Tensor wrap_impl(detail::ImplPtr impl);

Tensor zeros_like(const Tensor& t);
Tensor ones_like(const Tensor& t);

/// Records backward closures of the ops executed while it is the active tape.
/// Replaying them in reverse order propagates gradients by the chain rule.
/// One backward pass per tape; construct a fresh tape for the next step.
class GradTape {
 public:
  GradTape();
  ~GradTape();
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  static GradTape* active();

  void record(std::function<void()> backward_fn);
  /// Seeds d(loss)/d(loss) = 1 and runs the tape in reverse. Frees each
  /// record (and the intermediates it holds) as soon as it has run.
  void backward(const Tensor& loss);

  std::size_t num_records() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<std::function<void()>> records_;
  GradTape* prev_ = nullptr;
  bool consumed_ = false;
};

/// backward() on the active tape.
void backward(const Tensor& loss);

// Elementwise arithmetic with broadcasting over singleton axes
// (shapes aligned from the trailing dimension, rank <= 4).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

Tensor scale(const Tensor& x, double k);
Tensor add_scalar(const Tensor& x, double k);

/// 2-d matrix product [MxK]*[KxN] -> [MxN].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor softplus(const Tensor& x);

/// Sum of all elements, as a shape-[1] tensor.
Tensor sum_all(const Tensor& x);

/// Concatenate along the channel axis of NxCxHxW tensors.
Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Channels [start, start+len) of an NxCxHxW tensor.
Tensor narrow_channels(const Tensor& x, int start, int len);

// Checkpoint format: one text header line "shape: d0 d1 ... dn\n"
// followed by the buffer as little-endian 64-bit floats.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace casunext
