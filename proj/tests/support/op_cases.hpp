#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "recgpt/numerics/grad_check.hpp"
#include "recgpt/numerics/ops.hpp"
#include "recgpt/numerics/rng.hpp"

namespace opcheck {

using namespace recgpt::numerics;

inline TensorD random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  auto t = TensorD::matrix(r, c);
  for (auto& v : t.values()) v = rng.normal(0.0, scale);
  return t;
}

inline double weighted_sum(const TensorD& x, const TensorD& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  return s;
}

template <typename T>
BasicTensor<T> cast_to(const TensorD& t) {
  return t.cast<T>();
}

// Each op below is checked twice per seed: in 64-bit (analytic and numeric
// both double) and in 32-bit (analytic gradient from the float kernels,
// central differences from the double kernels on the same values).

struct OpCase {
  std::vector<TensorD> inputs;
  // Scalar objective and gradient, implemented with kernels of type T.
  std::function<double(std::span<const TensorD>, std::vector<TensorD>&)> run_double;
  std::function<std::vector<TensorD>(std::span<const TensorD>)> grads_float;
};

inline std::pair<double, double> check_case(const OpCase& c) {
  const double e64 = grad_check(c.run_double, c.inputs).max_rel_error;
  ScalarFn value = [&](std::span<const TensorD> x) {
    std::vector<TensorD> unused;
    return c.run_double(x, unused);
  };
  const auto g32 = c.grads_float(c.inputs);
  const double e32 = grad_check(value, c.inputs, g32).max_rel_error;
  return {e64, e32};
}

template <typename T>
std::vector<TensorD> to_double(const std::vector<BasicTensor<T>>& ts) {
  std::vector<TensorD> out;
  for (const auto& t : ts) out.push_back(t.template cast<double>());
  return out;
}

// sum(matmul(A, B) * R)
template <typename T>
double matmul_obj(std::span<const TensorD> x, const TensorD& r, std::vector<BasicTensor<T>>* g) {
  const auto a = cast_to<T>(x[0]), b = cast_to<T>(x[1]);
  const auto out = matmul(a, b);
  if (g) {
    BasicTensor<T> da(a.shape()), db(b.shape());
    matmul_backward(a, b, r.cast<T>(), &da, &db);
    *g = {da, db};
  }
  return weighted_sum(out.template cast<double>(), r);
}

template <typename T>
double matmul_bt_obj(std::span<const TensorD> x, const TensorD& r,
                     std::vector<BasicTensor<T>>* g) {
  const auto a = cast_to<T>(x[0]), b = cast_to<T>(x[1]);
  const auto out = matmul_bt(a, b);
  if (g) {
    BasicTensor<T> da(a.shape()), db(b.shape());
    matmul_bt_backward(a, b, r.cast<T>(), &da, &db);
    *g = {da, db};
  }
  return weighted_sum(out.template cast<double>(), r);
}

template <typename T>
double bias_obj(std::span<const TensorD> x, const TensorD& r, std::vector<BasicTensor<T>>* g) {
  auto a = cast_to<T>(x[0]);
  const auto b = cast_to<T>(x[1]);
  add_row_bias(a, b);
  if (g) {
    BasicTensor<T> db(b.shape());
    row_bias_backward(r.cast<T>(), db);
    *g = {r.cast<T>(), db};
  }
  return weighted_sum(a.template cast<double>(), r);
}

template <typename T>
double softmax_obj(std::span<const TensorD> x, const TensorD& r, std::vector<BasicTensor<T>>* g) {
  const auto logits = cast_to<T>(x[0]);
  const auto p = masked_softmax(logits, causal_mask<T>(logits.rows()));
  if (g) *g = {masked_softmax_backward(p, r.cast<T>())};
  return weighted_sum(p.template cast<double>(), r);
}

template <typename T>
double relu_obj(std::span<const TensorD> x, const TensorD& r, std::vector<BasicTensor<T>>* g) {
  const auto a = cast_to<T>(x[0]);
  if (g) *g = {relu_backward(a, r.cast<T>())};
  return weighted_sum(relu(a).template cast<double>(), r);
}

template <typename T>
double embedding_obj(std::span<const TensorD> x, const TensorD& r,
                     std::vector<BasicTensor<T>>* g) {
  static const std::vector<std::int32_t> ids{2, 0, 2, 4};
  const auto table = cast_to<T>(x[0]);
  const auto rows = embedding_lookup(table, std::span<const std::int32_t>(ids));
  if (g) {
    BasicTensor<T> dt(table.shape());
    embedding_backward(std::span<const std::int32_t>(ids), r.cast<T>(), dt);
    *g = {dt};
  }
  return weighted_sum(rows.template cast<double>(), r);
}

template <typename T>
double bce_obj(std::span<const TensorD> x, const TensorD&, std::vector<BasicTensor<T>>* g) {
  const auto s = cast_to<T>(x[0]);
  const std::vector<T> negs(s.values().begin() + 1, s.values().end());
  const auto res = bce_pair_loss<T>(s[0], std::span<const T>(negs));
  if (g) {
    BasicTensor<T> d(s.shape());
    d[0] = res.d_pos;
    for (std::size_t i = 0; i < negs.size(); ++i) d[i + 1] = res.d_neg[i];
    *g = {d};
  }
  return static_cast<double>(res.loss);
}

template <typename T>
double ce_obj(std::span<const TensorD> x, const TensorD&, std::vector<BasicTensor<T>>* g) {
  const auto l = cast_to<T>(x[0]);
  const auto res = cross_entropy<T>(l.values(), 2);
  if (g) *g = {BasicTensor<T>(l.shape(), res.d_logits)};
  return static_cast<double>(res.loss);
}

using Objective = double (*)(std::span<const TensorD>, const TensorD&,
                             std::vector<BasicTensor<double>>*);
using ObjectiveF = double (*)(std::span<const TensorD>, const TensorD&,
                              std::vector<BasicTensor<float>>*);

inline OpCase make_case(std::vector<TensorD> inputs, TensorD r, Objective fd, ObjectiveF ff) {
  OpCase c;
  c.inputs = std::move(inputs);
  c.run_double = [fd, r](std::span<const TensorD> x, std::vector<TensorD>& g) {
    std::vector<TensorD> gd;
    const double v = fd(x, r, &gd);
    g = gd;
    return v;
  };
  c.grads_float = [ff, r](std::span<const TensorD> x) {
    std::vector<Tensor> gf;
    ff(x, r, &gf);
    return to_double(gf);
  };
  return c;
}

inline TensorD away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  auto t = random_tensor(rng, r, c);
  for (auto& v : t.values()) v += v >= 0 ? 0.1 : -0.1;
  return t;
}


struct NamedOp {
  const char* name;
  std::function<OpCase(Rng&)> build;
};

inline std::vector<NamedOp> all_ops() {
  return {
    {"matmul",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 3, 4), random_tensor(rng, 4, 2)},
                        random_tensor(rng, 3, 2), matmul_obj<double>, matmul_obj<float>);
     }},
    {"matmul_bt",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 3, 4), random_tensor(rng, 5, 4)},
                        random_tensor(rng, 3, 5), matmul_bt_obj<double>, matmul_bt_obj<float>);
     }},
    {"row_bias",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)},
                        random_tensor(rng, 3, 4), bias_obj<double>, bias_obj<float>);
     }},
    {"masked_softmax",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 4, 4)}, random_tensor(rng, 4, 4),
                        softmax_obj<double>, softmax_obj<float>);
     }},
    {"relu",
     [](Rng& rng) {
       return make_case({away_from_zero(rng, 3, 4)}, random_tensor(rng, 3, 4),
                        relu_obj<double>, relu_obj<float>);
     }},
    {"embedding",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 5, 3)}, random_tensor(rng, 4, 3),
                        embedding_obj<double>, embedding_obj<float>);
     }},
    {"bce_pair_loss",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 1, 3)}, TensorD(), bce_obj<double>, bce_obj<float>);
     }},
    {"cross_entropy",
     [](Rng& rng) {
       return make_case({random_tensor(rng, 1, 6)}, TensorD(), ce_obj<double>, ce_obj<float>);
     }},
  };
}

}  // namespace opcheck
