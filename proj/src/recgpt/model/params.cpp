#include "recgpt/model/params.hpp"

#include <cmath>

#include "recgpt/numerics/rng.hpp"

namespace recgpt::model {

using numerics::BasicParameter;
using numerics::BasicTensor;

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims) {
  if (dims.n_heads == 0 || dims.d % dims.n_heads != 0) {
    throw ConfigError("model dims: d must be a positive multiple of n_heads");
  }
  auto mat = [](std::size_t r, std::size_t c) { return BasicTensor<T>::matrix(r, c); };
  ModelParams p;
  p.dims = dims;
  p.user_emb = {"user_emb", mat(dims.num_users, dims.d)};
  p.item_emb = {"item_emb", mat(dims.num_items, dims.d)};
  p.pos_emb = {"pos_emb", mat(dims.max_len, dims.d)};
  p.seg_emb = {"seg_emb", mat(2, dims.d)};
  for (std::size_t l = 0; l < dims.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    LayerParams<T> lp;
    lp.wq = {pre + "wq", mat(dims.d, dims.d)};
    lp.wk = {pre + "wk", mat(dims.d, dims.d)};
    lp.wv = {pre + "wv", mat(dims.d, dims.d)};
    lp.ws = {pre + "ws", mat(dims.d, dims.d)};
    lp.w1 = {pre + "w1", mat(dims.d, dims.d_ff)};
    lp.b1 = {pre + "b1", BasicTensor<T>::vector(dims.d_ff)};
    lp.w2 = {pre + "w2", mat(dims.d_ff, dims.d)};
    lp.b2 = {pre + "b2", BasicTensor<T>::vector(dims.d)};
    p.layers.push_back(std::move(lp));
  }
  p.out_layer = {"out_layer", mat(dims.num_items, dims.d)};
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::initialize(const ModelDims& dims, std::uint64_t seed) {
  auto p = zeros(dims);
  numerics::Rng rng(numerics::Rng::derive(seed, 0x1417ULL));
  auto fill = [&](BasicParameter<T>& param, double stddev) {
    for (auto& v : param.value.values()) v = static_cast<T>(rng.normal(0.0, stddev));
  };
  fill(p.user_emb, 0.02);
  fill(p.item_emb, 0.02);
  fill(p.pos_emb, 0.02);
  for (auto& lp : p.layers) {
    const double in_d = 1.0 / std::sqrt(static_cast<double>(dims.d));
    const double in_ff = 1.0 / std::sqrt(static_cast<double>(dims.d_ff));
    fill(lp.wq, in_d);
    fill(lp.wk, in_d);
    fill(lp.wv, in_d);
    fill(lp.ws, in_d);
    fill(lp.w1, in_d);
    fill(lp.w2, in_ff);
  }
  p.reset_for_tuning();
  return p;
}

template <typename T>
void ModelParams<T>::reset_for_tuning() {
  seg_emb.value.zero();
  out_layer.value = item_emb.value;
}

template <typename T>
std::vector<BasicParameter<T>*> ModelParams<T>::parameters() {
  std::vector<BasicParameter<T>*> out{&user_emb, &item_emb, &pos_emb, &seg_emb};
  for (auto& lp : layers) {
    for (auto* q : {&lp.wq, &lp.wk, &lp.wv, &lp.ws, &lp.w1, &lp.b1, &lp.w2, &lp.b2}) {
      out.push_back(q);
    }
  }
  out.push_back(&out_layer);
  return out;
}

template <typename T>
std::vector<const BasicParameter<T>*> ModelParams<T>::parameters() const {
  auto mut = const_cast<ModelParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
BasicParameter<T>* ModelParams<T>::find(const std::string& name) {
  for (auto* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto* p : parameters())
    if (!p->value.all_finite()) return false;
  return true;
}

template <typename T>
bool ModelParams<T>::values_equal(const ModelParams& other) const {
  auto a = parameters();
  auto b = other.parameters();
  if (!(dims == other.dims) || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->name != b[i]->name || !(a[i]->value == b[i]->value)) return false;
  }
  return true;
}

template class ModelParams<float>;
template class ModelParams<double>;
template class ModelParams<long double>;

}  // namespace recgpt::model
