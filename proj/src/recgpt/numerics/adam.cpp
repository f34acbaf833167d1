#include "recgpt/numerics/adam.hpp"

#include <cmath>

namespace recgpt::numerics {

template <typename T>
void adam_step(BasicParameter<T>& param, BasicAdamState<T>& state) {
  if (state.m.shape() != param.value.shape() || state.v.shape() != param.value.shape()) {
    throw DimensionError("adam_step: optimizer state shape does not match parameter " +
                         param.name);
  }
  state.step_count += 1;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step_count);
  const T c1 = static_cast<T>(1.0 - std::pow(o.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(o.beta2, t));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T lr = static_cast<T>(o.lr), eps = static_cast<T>(o.eps);

  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const T g = param.grad[i];
    state.m[i] = b1 * state.m[i] + (T{1} - b1) * g;
    state.v[i] = b2 * state.v[i] + (T{1} - b2) * g * g;
    const T m_hat = state.m[i] / c1;
    const T v_hat = state.v[i] / c2;
    param.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template void adam_step(BasicParameter<float>&, BasicAdamState<float>&);
template void adam_step(BasicParameter<double>&, BasicAdamState<double>&);

}  // namespace recgpt::numerics
