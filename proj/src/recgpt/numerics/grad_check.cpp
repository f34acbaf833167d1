#include "recgpt/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace recgpt::numerics {
namespace {

template <typename R, typename Fn>
GradCheckResult central_differences(const Fn& value, std::span<const TensorD> inputs,
                                    std::span<const TensorD> analytic, double h) {
  if (analytic.size() != inputs.size()) {
    throw DimensionError("grad_check: one analytic gradient per input is required");
  }
  std::vector<TensorD> probe(inputs.begin(), inputs.end());
  const R base = value(probe);
  if (!std::isfinite(base)) throw NumericalError("grad_check: function value is not finite");

  GradCheckResult result;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    if (analytic[k].shape() != probe[k].shape()) {
      throw DimensionError("grad_check: gradient " + std::to_string(k) +
                           " shape does not match its input");
    }
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double saved = probe[k][i];
      probe[k][i] = saved + h;
      const R f_plus = value(probe);
      probe[k][i] = saved - h;
      const R f_minus = value(probe);
      probe[k][i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericalError("grad_check: function value is not finite");
      }
      const auto numeric = static_cast<double>((f_plus - f_minus) / (R{2} * h));
      const double a = analytic[k][i];
      const double rel =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > result.max_rel_error) {
        result = {rel, k, i, a, numeric};
      }
    }
  }
  return result;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& value, std::span<const TensorD> inputs,
                           std::span<const TensorD> analytic, double h) {
  return central_differences<double>(value, inputs, analytic, h);
}

GradCheckResult grad_check_extended(const ExtendedScalarFn& value,
                                    std::span<const TensorD> inputs,
                                    std::span<const TensorD> analytic, double h) {
  return central_differences<long double>(value, inputs, analytic, h);
}

GradCheckResult grad_check(const DifferentiableFn& fn, std::span<const TensorD> inputs,
                           double h) {
  std::vector<TensorD> grads;
  grads.reserve(inputs.size());
  for (const auto& t : inputs) grads.emplace_back(t.shape());
  fn(inputs, grads);
  std::vector<TensorD> scratch;
  auto value = [&](std::span<const TensorD> x) {
    scratch.clear();
    for (const auto& t : x) scratch.emplace_back(t.shape());
    return fn(x, scratch);
  };
  return grad_check(value, inputs, grads, h);
}

}  // namespace recgpt::numerics
