#pragma once

#include <cstdint>

#include "recgpt/numerics/tensor.hpp"

namespace recgpt::numerics {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct BasicAdamState {
  BasicTensor<T> m;
  BasicTensor<T> v;
  std::int64_t step_count = 0;
  AdamOptions options;

  BasicAdamState() = default;
  BasicAdamState(const std::vector<std::size_t>& shape, AdamOptions opts)
      : m(shape), v(shape), options(opts) {}
};

using AdamState = BasicAdamState<float>;

// One bias-corrected Adam update of param.value from param.grad. The gradient
// buffer is left untouched; the caller zeroes it at the step boundary.
template <typename T>
void adam_step(BasicParameter<T>& param, BasicAdamState<T>& state);

}  // namespace recgpt::numerics
