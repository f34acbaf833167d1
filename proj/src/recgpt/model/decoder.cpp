#include "recgpt/model/decoder.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "recgpt/numerics/ops.hpp"

namespace recgpt::model {

using numerics::BasicTensor;

namespace {

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t start, std::size_t width) {
  auto out = BasicTensor<T>::matrix(x.rows(), width);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < width; ++j) out(i, j) = x(i, start + j);
  return out;
}

template <typename T>
void add_cols(BasicTensor<T>& dst, const BasicTensor<T>& src, std::size_t start) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst(i, start + j) += src(i, j);
}

template <typename T>
void require_finite(const BasicTensor<T>& x, const char* what) {
  if (!x.all_finite()) throw NumericalError(std::string("non-finite values in ") + what);
}

template <typename T>
void check_sequence(const ModelParams<T>& params, const SequenceView& seq) {
  if (seq.items.empty()) throw DimensionError("forward: empty input sequence");
  if (seq.items.size() != seq.segments.size()) {
    throw DimensionError("forward: items and segments differ in length");
  }
  if (seq.items.size() > params.dims.max_len) {
    throw DimensionError("forward: sequence length " + std::to_string(seq.items.size()) +
                         " exceeds max_len " + std::to_string(params.dims.max_len));
  }
  if (seq.user < 0 || static_cast<std::size_t>(seq.user) >= params.dims.num_users) {
    throw IndexError("forward: user id " + std::to_string(seq.user) + " out of range");
  }
}

std::vector<std::int32_t> iota_ids(std::size_t n) {
  std::vector<std::int32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int32_t>(i);
  return ids;
}

std::vector<std::int32_t> segment_ids(std::span<const Segment> segs) {
  std::vector<std::int32_t> ids(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) ids[i] = static_cast<std::int32_t>(segs[i]);
  return ids;
}

}  // namespace

template <typename T>
BasicTensor<T> embed_input(const ModelParams<T>& params, const SequenceView& seq) {
  check_sequence(params, seq);
  const std::size_t L = seq.items.size();
  auto h = numerics::embedding_lookup(params.item_emb.value, seq.items);
  const auto pos_ids = iota_ids(L);
  const auto seg_ids = segment_ids(seq.segments);
  const auto pos = numerics::embedding_lookup(params.pos_emb.value, std::span<const std::int32_t>(pos_ids));
  const auto seg = numerics::embedding_lookup(params.seg_emb.value, std::span<const std::int32_t>(seg_ids));
  const auto user = params.user_emb.value.row(static_cast<std::size_t>(seq.user));
  for (std::size_t t = 0; t < L; ++t) {
    auto r = h.row(t);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += user[j] + pos(t, j) + seg(t, j);
  }
  return h;
}

template <typename T>
BasicTensor<T> decoder_block(const ModelParams<T>& params, std::size_t layer,
                             const BasicTensor<T>& input, LayerTrace<T>* trace) {
  const auto& lp = params.layers.at(layer);
  const std::size_t L = input.rows();
  const std::size_t d = params.dims.d;
  const std::size_t m = params.dims.n_heads;
  const std::size_t dh = params.dims.head_dim();
  const T scale = T{1} / std::sqrt(static_cast<T>(d));

  auto q = numerics::matmul(input, lp.wq.value);
  auto k = numerics::matmul(input, lp.wk.value);
  auto v = numerics::matmul(input, lp.wv.value);
  const auto mask = numerics::causal_mask<T>(L);

  auto heads = BasicTensor<T>::matrix(L, d);
  std::vector<BasicTensor<T>> probs;
  probs.reserve(m);
  for (std::size_t h = 0; h < m; ++h) {
    const auto qh = slice_cols(q, h * dh, dh);
    const auto kh = slice_cols(k, h * dh, dh);
    const auto vh = slice_cols(v, h * dh, dh);
    auto logits = numerics::matmul_bt(qh, kh);
    for (auto& x : logits.values()) x *= scale;
    auto p = numerics::masked_softmax(logits, mask);
    add_cols(heads, numerics::matmul(p, vh), h * dh);
    probs.push_back(std::move(p));
  }
  auto merged = numerics::matmul(heads, lp.ws.value);
  auto pre_act = numerics::matmul(merged, lp.w1.value);
  numerics::add_row_bias(pre_act, lp.b1.value);
  auto act = numerics::relu(pre_act);
  auto out = numerics::matmul(act, lp.w2.value);
  numerics::add_row_bias(out, lp.b2.value);
  require_finite(out, "decoder block output");

  if (trace) {
    trace->input = input;
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->probs = std::move(probs);
    trace->heads = std::move(heads);
    trace->merged = std::move(merged);
    trace->pre_act = std::move(pre_act);
    trace->act = std::move(act);
  }
  return out;
}

template <typename T>
BasicTensor<T> forward(const ModelParams<T>& params, const SequenceView& seq,
                       ForwardTrace<T>* trace) {
  auto h = embed_input(params, seq);
  if (trace) {
    trace->embedded = h;
    trace->layers.assign(params.layers.size(), {});
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = decoder_block(params, l, h, trace ? &trace->layers[l] : nullptr);
  }
  return h;
}

template <typename T>
void backward(ModelParams<T>& params, const SequenceView& seq, const ForwardTrace<T>& trace,
              const BasicTensor<T>& d_hidden) {
  const std::size_t d = params.dims.d;
  const std::size_t m = params.dims.n_heads;
  const std::size_t dh = params.dims.head_dim();
  const T scale = T{1} / std::sqrt(static_cast<T>(d));

  BasicTensor<T> d_out = d_hidden;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    auto& lp = params.layers[l];
    const auto& tr = trace.layers[l];
    const std::size_t L = tr.input.rows();

    // FFN
    numerics::row_bias_backward(d_out, lp.b2.grad);
    auto d_act = BasicTensor<T>::matrix(L, params.dims.d_ff);
    numerics::matmul_backward(tr.act, lp.w2.value, d_out, &d_act, &lp.w2.grad);
    auto d_pre = numerics::relu_backward(tr.pre_act, d_act);
    numerics::row_bias_backward(d_pre, lp.b1.grad);
    auto d_merged = BasicTensor<T>::matrix(L, d);
    numerics::matmul_backward(tr.merged, lp.w1.value, d_pre, &d_merged, &lp.w1.grad);

    // head merge and attention
    auto d_heads = BasicTensor<T>::matrix(L, d);
    numerics::matmul_backward(tr.heads, lp.ws.value, d_merged, &d_heads, &lp.ws.grad);
    auto d_q = BasicTensor<T>::matrix(L, d);
    auto d_k = BasicTensor<T>::matrix(L, d);
    auto d_v = BasicTensor<T>::matrix(L, d);
    for (std::size_t h = 0; h < m; ++h) {
      const auto qh = slice_cols(tr.q, h * dh, dh);
      const auto kh = slice_cols(tr.k, h * dh, dh);
      const auto vh = slice_cols(tr.v, h * dh, dh);
      const auto d_ah = slice_cols(d_heads, h * dh, dh);
      auto d_p = BasicTensor<T>::matrix(L, L);
      auto d_vh = BasicTensor<T>::matrix(L, dh);
      numerics::matmul_backward(tr.probs[h], vh, d_ah, &d_p, &d_vh);
      auto d_logits = numerics::masked_softmax_backward(tr.probs[h], d_p);
      for (auto& x : d_logits.values()) x *= scale;
      auto d_qh = BasicTensor<T>::matrix(L, dh);
      auto d_kh = BasicTensor<T>::matrix(L, dh);
      numerics::matmul_bt_backward(qh, kh, d_logits, &d_qh, &d_kh);
      add_cols(d_q, d_qh, h * dh);
      add_cols(d_k, d_kh, h * dh);
      add_cols(d_v, d_vh, h * dh);
    }
    auto d_in = BasicTensor<T>::matrix(L, d);
    numerics::matmul_backward(tr.input, lp.wq.value, d_q, &d_in, &lp.wq.grad);
    numerics::matmul_backward(tr.input, lp.wk.value, d_k, &d_in, &lp.wk.grad);
    numerics::matmul_backward(tr.input, lp.wv.value, d_v, &d_in, &lp.wv.grad);
    d_out = std::move(d_in);
  }

  // embedding sum
  const std::size_t L = seq.items.size();
  numerics::embedding_backward(seq.items, d_out, params.item_emb.grad);
  const auto pos_ids = iota_ids(L);
  numerics::embedding_backward(std::span<const std::int32_t>(pos_ids), d_out, params.pos_emb.grad);
  const auto seg_ids = segment_ids(seq.segments);
  numerics::embedding_backward(std::span<const std::int32_t>(seg_ids), d_out,
                               params.seg_emb.grad);
  auto user_grad = params.user_emb.grad.row(static_cast<std::size_t>(seq.user));
  for (std::size_t t = 0; t < L; ++t) {
    auto r = d_out.row(t);
    for (std::size_t j = 0; j < d; ++j) user_grad[j] += r[j];
  }
}

template <typename T>
const numerics::BasicParameter<T>& scorer_table(const ModelParams<T>& params, Scorer scorer) {
  return scorer == Scorer::kTiedEmbedding ? params.item_emb : params.out_layer;
}

template <typename T>
numerics::BasicParameter<T>& scorer_table(ModelParams<T>& params, Scorer scorer) {
  return scorer == Scorer::kTiedEmbedding ? params.item_emb : params.out_layer;
}

template <typename T>
std::vector<T> score_items(const ModelParams<T>& params, std::span<const T> hidden,
                           Scorer scorer) {
  const auto& table = scorer_table(params, scorer).value;
  if (hidden.size() != table.cols()) throw DimensionError("score_items: hidden width mismatch");
  std::vector<T> logits(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    auto r = table.row(i);
    std::conditional_t<(sizeof(T) > sizeof(double)), T, double> acc = 0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += static_cast<decltype(acc)>(r[j]) * hidden[j];
    logits[i] = static_cast<T>(acc);
  }
  return logits;
}

#define RECGPT_INSTANTIATE_DECODER(T)                                                      \
  template BasicTensor<T> embed_input(const ModelParams<T>&, const SequenceView&);         \
  template BasicTensor<T> decoder_block(const ModelParams<T>&, std::size_t,                \
                                        const BasicTensor<T>&, LayerTrace<T>*);            \
  template BasicTensor<T> forward(const ModelParams<T>&, const SequenceView&,              \
                                  ForwardTrace<T>*);                                       \
  template void backward(ModelParams<T>&, const SequenceView&, const ForwardTrace<T>&,     \
                         const BasicTensor<T>&);                                           \
  template const numerics::BasicParameter<T>& scorer_table(const ModelParams<T>&, Scorer); \
  template numerics::BasicParameter<T>& scorer_table(ModelParams<T>&, Scorer);             \
  template std::vector<T> score_items(const ModelParams<T>&, std::span<const T>, Scorer);

RECGPT_INSTANTIATE_DECODER(float)
RECGPT_INSTANTIATE_DECODER(double)
RECGPT_INSTANTIATE_DECODER(long double)

#undef RECGPT_INSTANTIATE_DECODER

}  // namespace recgpt::model
