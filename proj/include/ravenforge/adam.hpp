#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ravenforge/tensor.hpp"

namespace rvf {

// ADAM with bias correction. Moment stores are shape-aligned with their
// parameters; step_count increases by exactly one per update.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Tensor<T>> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    if (lr <= 0) throw ValueError("adam: learning rate must be positive");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
      throw ValueError("adam: betas must be in (0,1)");
    for (auto& p : params) {
      Slot s;
      s.param = p;
      s.m.assign(static_cast<size_t>(p.size()), T(0));
      s.v.assign(static_cast<size_t>(p.size()), T(0));
      slots_.push_back(std::move(s));
    }
  }

  int64_t step_count() const { return step_count_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  void zero_grad() {
    for (auto& s : slots_) s.param.zero_grad();
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (auto& s : slots_) {
      if (!s.param.has_grad()) continue;  // zero gradient, moments stay zero
      auto g = s.param.grad();
      auto p = s.param.value_mut();
      if (g.size() != s.m.size())
        throw ShapeError("adam: gradient/moment shape mismatch");
      for (size_t i = 0; i < g.size(); ++i) {
        s.m[i] = static_cast<T>(beta1_ * s.m[i] + (1.0 - beta1_) * g[i]);
        s.v[i] = static_cast<T>(beta2_ * s.v[i] +
                                (1.0 - beta2_) * static_cast<double>(g[i]) * g[i]);
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        p[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + epsilon_));
      }
    }
  }

 private:
  struct Slot {
    Tensor<T> param;
    std::vector<T> m, v;
  };

  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, epsilon_;
  int64_t step_count_ = 0;
};

}  // namespace rvf
