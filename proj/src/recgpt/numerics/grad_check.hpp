#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "recgpt/numerics/tensor.hpp"

namespace recgpt::numerics {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Scalar function of several tensors, evaluated in 64-bit.
using ScalarFn = std::function<double(std::span<const TensorD>)>;

// Scalar function that also writes its analytic gradient (one tensor per input,
// shapes matching the inputs).
using DifferentiableFn =
    std::function<double(std::span<const TensorD>, std::vector<TensorD>& grads)>;

// Compares analytic gradients against central differences of `value`.
// Per element: |a - n| / max(1e-8, |a| + |n|); the maximum is reported.
GradCheckResult grad_check(const ScalarFn& value, std::span<const TensorD> inputs,
                           std::span<const TensorD> analytic, double h = 1e-5);

GradCheckResult grad_check(const DifferentiableFn& fn, std::span<const TensorD> inputs,
                           double h = 1e-5);

// Same comparison with the central differences taken in extended precision, so
// that the reference is not limited by 64-bit cancellation in f(x+h) - f(x-h).
using ExtendedScalarFn = std::function<long double(std::span<const TensorD>)>;

GradCheckResult grad_check_extended(const ExtendedScalarFn& value,
                                    std::span<const TensorD> inputs,
                                    std::span<const TensorD> analytic, double h = 1e-5);

}  // namespace recgpt::numerics
