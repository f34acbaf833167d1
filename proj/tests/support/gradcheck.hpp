#pragma once

#include <span>
#include <vector>

#include "recgpt/model/params.hpp"
#include "recgpt/numerics/grad_check.hpp"

namespace gc {

using recgpt::model::ModelParams;
using recgpt::numerics::TensorD;

template <typename T>
void load_values(ModelParams<T>& p, std::span<const TensorD> xs) {
  auto ps = p.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = xs[i].cast<T>();
}

inline std::vector<TensorD> values_of(const ModelParams<double>& p) {
  std::vector<TensorD> out;
  for (const auto* prm : p.parameters()) out.push_back(prm->value);
  return out;
}

template <typename T>
std::vector<TensorD> grads_of(const ModelParams<T>& p) {
  std::vector<TensorD> out;
  for (const auto* prm : p.parameters()) out.push_back(prm->grad.template cast<double>());
  return out;
}

struct ObjectiveCheck {
  recgpt::numerics::GradCheckResult bits64;
  recgpt::numerics::GradCheckResult bits32;
};

// Analytic gradients of a double and a float copy of p0 against central
// differences of the same loss evaluated in long double. `loss(params, backprop)`
// must be generic over the scalar type.
template <typename LossFn>
ObjectiveCheck check_objective(const ModelParams<double>& p0, LossFn loss) {
  const auto inputs = values_of(p0);
  recgpt::numerics::ExtendedScalarFn value = [&](std::span<const TensorD> xs) {
    auto p = p0.cast<long double>();
    load_values(p, xs);
    return static_cast<long double>(loss(p, false));
  };

  auto pd = p0;
  pd.zero_grad();
  loss(pd, true);
  auto pf = p0.cast<float>();
  pf.zero_grad();
  loss(pf, true);

  return {recgpt::numerics::grad_check_extended(value, inputs, grads_of(pd)),
          recgpt::numerics::grad_check_extended(value, inputs, grads_of(pf))};
}

}  // namespace gc
