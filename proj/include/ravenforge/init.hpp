#pragma once

#include <cmath>

#include "ravenforge/rng.hpp"
#include "ravenforge/tensor.hpp"

namespace rvf {

// Uniform He-style fan-in init: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <typename T>
Tensor<T> he_uniform(Shape shape, int fan_in, Rng& rng) {
  auto t = Tensor<T>::zeros(std::move(shape));
  const double limit = std::sqrt(6.0 / fan_in);
  rng.fill_uniform<T>(t.value_mut(), -limit, limit);
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> zeros_param(Shape shape) {
  auto t = Tensor<T>::zeros(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> ones_param(Shape shape) {
  auto t = Tensor<T>::full(std::move(shape), T(1));
  t.set_requires_grad(true);
  return t;
}

}  // namespace rvf
