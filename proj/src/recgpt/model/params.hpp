#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recgpt/model/hyper.hpp"
#include "recgpt/numerics/tensor.hpp"

namespace recgpt::model {

template <typename T>
struct LayerParams {
  numerics::BasicParameter<T> wq, wk, wv;  // d x d; head h owns columns [h*d/m, (h+1)*d/m)
  numerics::BasicParameter<T> ws;          // d x d head merge
  numerics::BasicParameter<T> w1, b1;      // d x d_ff, d_ff
  numerics::BasicParameter<T> w2, b2;      // d_ff x d, d
};

// Every learnable tensor of the decoder. The segment table has two rows
// (REAL, PROMPT); the output layer mirrors the item table's shape.
template <typename T>
class ModelParams {
 public:
  ModelDims dims;
  numerics::BasicParameter<T> user_emb;   // |U| x d
  numerics::BasicParameter<T> item_emb;   // |V| x d
  numerics::BasicParameter<T> pos_emb;    // max_len x d
  numerics::BasicParameter<T> seg_emb;    // 2 x d
  std::vector<LayerParams<T>> layers;
  numerics::BasicParameter<T> out_layer;  // |V| x d

  // Zero-valued parameters with the right shapes and names.
  static ModelParams zeros(const ModelDims& dims);

  // Embedding tables ~ N(0, 0.02); projections ~ N(0, 1/sqrt(fan_in));
  // biases, segment table zero; output layer = item table.
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed);

  // Prompt-tuning entry state: segment table zeroed, output layer copied from
  // the item table.
  void reset_for_tuning();

  std::vector<numerics::BasicParameter<T>*> parameters();
  std::vector<const numerics::BasicParameter<T>*> parameters() const;
  numerics::BasicParameter<T>* find(const std::string& name);

  void zero_grad();
  bool all_finite() const;

  template <typename U>
  ModelParams<U> cast() const {
    auto out = ModelParams<U>::zeros(dims);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
  }

  bool values_equal(const ModelParams& other) const;
};

}  // namespace recgpt::model
