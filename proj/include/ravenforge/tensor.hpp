#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ravenforge/error.hpp"

namespace rvf {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

namespace detail {

// Thread-local switch: ops recorded onto the tape only while enabled.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily, always same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, adds into parents

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

// Disables graph recording in a scope (evaluation, frozen embedders).
struct NoGradGuard {
  NoGradGuard() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Dense n-d array participating in a reverse-mode tape. Value semantics via a
// shared node: copies alias the same storage. Values are immutable once an op
// has consumed the tensor; only grad stores mutate afterwards.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape) {
    return Tensor(std::move(shape), {});
  }

  static Tensor full(Shape shape, T v) {
    Tensor t(std::move(shape), {});
    std::fill(t.node_->value.begin(), t.node_->value.end(), v);
    return t;
  }

  static Tensor from_vec(Shape shape, std::vector<T> data) {
    if (numel(shape) != static_cast<int64_t>(data.size()))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    Tensor t;
    t.node_ = std::make_shared<detail::Node<T>>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    return t;
  }

  static Tensor scalar(T v) { return from_vec({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<const T> value() const { return node_->value; }
  // Mutable access is for leaf initialization and optimizer updates only.
  std::span<T> value_mut() { return node_->value; }

  T item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor");
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    node_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<T> grad_mut() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (!node_->grad.empty())
      std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  std::shared_ptr<detail::Node<T>> node() const { return node_; }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  Tensor(Shape shape, std::vector<T>) {
    node_ = std::make_shared<detail::Node<T>>();
    node_->value.assign(static_cast<size_t>(numel(shape)), T(0));
    node_->shape = std::move(shape);
  }

  std::shared_ptr<detail::Node<T>> node_;
};

namespace detail {

// Builds an op output node: wires parents and the backprop closure only when
// grad mode is on and some input requires grad.
template <typename T>
Tensor<T> make_op(Shape out_shape, std::vector<T> out_value,
                  std::initializer_list<Tensor<T>> inputs,
                  std::function<void(Node<T>&)> backprop) {
  Tensor<T> out = Tensor<T>::from_vec(std::move(out_shape), std::move(out_value));
  bool needs = false;
  if (grad_mode()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    auto n = out.node();
    n->requires_grad = true;
    for (const auto& in : inputs) n->parents.push_back(in.node());
    n->backprop = std::move(backprop);
  }
  return out;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---- elementwise ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> out(a.value().begin(), a.value().end());
  for (int64_t i = 0; i < a.size(); ++i) out[i] += b.value()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a, b},
                            [an, bn](detail::Node<T>& self) {
                              if (an->requires_grad) {
                                an->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  an->grad[i] += self.grad[i];
                              }
                              if (bn->requires_grad) {
                                bn->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  bn->grad[i] += self.grad[i];
                              }
                            });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> out(a.value().begin(), a.value().end());
  for (int64_t i = 0; i < a.size(); ++i) out[i] -= b.value()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a, b},
                            [an, bn](detail::Node<T>& self) {
                              if (an->requires_grad) {
                                an->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  an->grad[i] += self.grad[i];
                              }
                              if (bn->requires_grad) {
                                bn->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  bn->grad[i] -= self.grad[i];
                              }
                            });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> out(static_cast<size_t>(a.size()));
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a, b},
                            [an, bn](detail::Node<T>& self) {
                              if (an->requires_grad) {
                                an->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  an->grad[i] += self.grad[i] * bn->value[i];
                              }
                              if (bn->requires_grad) {
                                bn->ensure_grad();
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  bn->grad[i] += self.grad[i] * an->value[i];
                              }
                            });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> out(static_cast<size_t>(a.size()));
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.value()[i] * c;
  auto an = a.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [an, c](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i] * c;
                            });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> out(a.value().begin(), a.value().end());
  for (auto& v : out) v += c;
  auto an = a.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [an](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i];
                            });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> out(static_cast<size_t>(a.size()));
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.value()[i] * a.value()[i];
  auto an = a.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [an](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i] * T(2) * an->value[i];
                            });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  std::vector<T> out(static_cast<size_t>(a.size()));
  for (int64_t i = 0; i < a.size(); ++i) out[i] = std::exp(a.value()[i]);
  auto an = a.node();
  return detail::make_op<T>(a.shape(), std::move(out), {a},
                            [an](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i] * self.value[i];
                            });
}

// ---- reductions / structure ----

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.value()) s += v;
  auto an = a.node();
  return detail::make_op<T>({1}, {s}, {a}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    const T g = self.grad[0];
    for (auto& v : an->grad) v += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  std::vector<T> out(a.value().begin(), a.value().end());
  auto an = a.node();
  return detail::make_op<T>(std::move(shape), std::move(out), {a},
                            [an](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i];
                            });
}

// Rows of a 2-d tensor picked by index; backward scatter-adds.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, std::vector<int> idx) {
  if (a.shape().size() != 2) throw ShapeError("gather_rows: need 2-d input");
  const int rows = a.dim(0), cols = a.dim(1);
  for (int i : idx)
    if (i < 0 || i >= rows) throw ShapeError("gather_rows: index out of range");
  std::vector<T> out(idx.size() * static_cast<size_t>(cols));
  const T* src = a.value().data();
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy_n(src + static_cast<size_t>(idx[r]) * cols, cols,
                out.data() + r * cols);
  auto an = a.node();
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  return detail::make_op<T>({static_cast<int>(ix->size()), cols},
                            std::move(out), {a},
                            [an, ix, cols](detail::Node<T>& self) {
                              an->ensure_grad();
                              for (size_t r = 0; r < ix->size(); ++r) {
                                T* dst = an->grad.data() +
                                         static_cast<size_t>((*ix)[r]) * cols;
                                const T* g = self.grad.data() + r * cols;
                                for (int c = 0; c < cols; ++c) dst[c] += g[c];
                              }
                            });
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError("concat_cols: need 2-d inputs with equal row count");
  const int rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<T> out(static_cast<size_t>(rows) * (ca + cb));
  for (int r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + static_cast<size_t>(r) * ca, ca,
                out.data() + static_cast<size_t>(r) * (ca + cb));
    std::copy_n(b.value().data() + static_cast<size_t>(r) * cb, cb,
                out.data() + static_cast<size_t>(r) * (ca + cb) + ca);
  }
  auto an = a.node(), bn = b.node();
  return detail::make_op<T>(
      {rows, ca + cb}, std::move(out), {a, b},
      [an, bn, rows, ca, cb](detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (int r = 0; r < rows; ++r) {
            const T* g = self.grad.data() + static_cast<size_t>(r) * (ca + cb);
            T* dst = an->grad.data() + static_cast<size_t>(r) * ca;
            for (int c = 0; c < ca; ++c) dst[c] += g[c];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int r = 0; r < rows; ++r) {
            const T* g =
                self.grad.data() + static_cast<size_t>(r) * (ca + cb) + ca;
            T* dst = bn->grad.data() + static_cast<size_t>(r) * cb;
            for (int c = 0; c < cb; ++c) dst[c] += g[c];
          }
        }
      });
}

// Sums consecutive blocks of `block` rows: [N*block, C] -> [N, C].
template <typename T>
Tensor<T> row_block_sum(const Tensor<T>& a, int block) {
  if (a.shape().size() != 2 || a.dim(0) % block != 0)
    throw ShapeError("row_block_sum: row count not divisible by block");
  const int groups = a.dim(0) / block, cols = a.dim(1);
  std::vector<T> out(static_cast<size_t>(groups) * cols, T(0));
  for (int g = 0; g < groups; ++g)
    for (int r = 0; r < block; ++r) {
      const T* src = a.value().data() +
                     (static_cast<size_t>(g) * block + r) * cols;
      T* dst = out.data() + static_cast<size_t>(g) * cols;
      for (int c = 0; c < cols; ++c) dst[c] += src[c];
    }
  auto an = a.node();
  return detail::make_op<T>(
      {groups, cols}, std::move(out), {a},
      [an, groups, block, cols](detail::Node<T>& self) {
        an->ensure_grad();
        for (int g = 0; g < groups; ++g)
          for (int r = 0; r < block; ++r) {
            T* dst = an->grad.data() +
                     (static_cast<size_t>(g) * block + r) * cols;
            const T* src = self.grad.data() + static_cast<size_t>(g) * cols;
            for (int c = 0; c < cols; ++c) dst[c] += src[c];
          }
      });
}

// ---- backward ----

// Reverse-mode sweep from a scalar loss. Repeated calls without zeroing
// accumulate into leaf grads.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1)
    throw ContractError("backward: loss must be a scalar tensor");
  using NodeT = detail::Node<T>;
  if (!loss.requires_grad()) return;

  // Iterative topological order over the requires-grad subgraph.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  struct Frame {
    NodeT* n;
    size_t next;
  };
  std::vector<Frame> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      NodeT* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  // Interior grads are per-pass scratch; only leaves accumulate across calls.
  for (NodeT* n : order)
    if (n->backprop && !n->grad.empty())
      std::fill(n->grad.begin(), n->grad.end(), T(0));

  loss.node()->ensure_grad();
  loss.node()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

// ---- numeric guards ----

inline bool& numeric_checks_enabled() {
  static bool enabled = true;
  return enabled;
}

template <typename T>
void check_finite(std::span<const T> v, const char* what) {
  for (T x : v)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value in ") + what);
}

template <typename T>
bool all_finite(std::span<const T> v) {
  for (T x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace rvf
