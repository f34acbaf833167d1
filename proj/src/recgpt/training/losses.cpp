#include "recgpt/training/losses.hpp"

#include <vector>

#include "recgpt/numerics/ops.hpp"

namespace recgpt::training {

using numerics::BasicTensor;

namespace {

template <typename T>
using Wide = LossValue<T>;

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  Wide<T> acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<Wide<T>>(a[i]) * b[i];
  return static_cast<T>(acc);
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

model::SequenceView view_of(const data::Batch& batch, std::size_t r) {
  return {batch.user(r), batch.items(r), batch.segments(r)};
}

}  // namespace

template <typename T>
LossValue<T> pretrain_batch_loss(model::ModelParams<T>& params, const data::Batch& batch,
                           bool backprop) {
  const std::size_t count = batch.target_count();
  if (count == 0) return 0.0;
  const T inv = T{1} / static_cast<T>(count);
  LossValue<T> total = 0;
  auto& table = params.item_emb;

  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto seq = view_of(batch, r);
    model::ForwardTrace<T> trace;
    const auto hidden = model::forward(params, seq, backprop ? &trace : nullptr);
    auto d_hidden = BasicTensor<T>::matrix(hidden.rows(), hidden.cols());
    const auto targets = batch.targets(r);
    std::vector<T> neg_scores(batch.neg_count());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t] == data::kNoTarget) continue;
      const auto h = hidden.row(t);
      const auto pos_row = static_cast<std::size_t>(targets[t]);
      const auto negs = batch.negatives(r, t);
      for (std::size_t j = 0; j < negs.size(); ++j) {
        neg_scores[j] = dot<T>(h, table.value.row(static_cast<std::size_t>(negs[j])));
      }
      const T pos_score = dot<T>(h, table.value.row(pos_row));
      const auto bce = numerics::bce_pair_loss<T>(pos_score, neg_scores);
      total += bce.loss;
      if (!backprop) continue;
      axpy<T>(bce.d_pos * inv, table.value.row(pos_row), d_hidden.row(t));
      axpy<T>(bce.d_pos * inv, h, table.grad.row(pos_row));
      for (std::size_t j = 0; j < negs.size(); ++j) {
        const auto nr = static_cast<std::size_t>(negs[j]);
        axpy<T>(bce.d_neg[j] * inv, table.value.row(nr), d_hidden.row(t));
        axpy<T>(bce.d_neg[j] * inv, h, table.grad.row(nr));
      }
    }
    if (backprop) model::backward(params, seq, trace, d_hidden);
  }
  return total / static_cast<LossValue<T>>(count);
}

template <typename T>
LossValue<T> tune_batch_loss(model::ModelParams<T>& params, const data::Batch& batch,
                       model::Scorer scorer, bool backprop) {
  const std::size_t count = batch.target_count();
  if (count == 0) return 0.0;
  const T inv = T{1} / static_cast<T>(count);
  LossValue<T> total = 0;
  auto& table = model::scorer_table(params, scorer);

  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto seq = view_of(batch, r);
    model::ForwardTrace<T> trace;
    const auto hidden = model::forward(params, seq, backprop ? &trace : nullptr);
    auto d_hidden = BasicTensor<T>::matrix(hidden.rows(), hidden.cols());
    const auto targets = batch.targets(r);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t] == data::kNoTarget) continue;
      const auto h = hidden.row(t);
      const auto logits = model::score_items<T>(params, h, scorer);
      const auto ce =
          numerics::cross_entropy<T>(logits, static_cast<std::size_t>(targets[t]));
      total += ce.loss;
      if (!backprop) continue;
      std::vector<Wide<T>> dh(h.size(), Wide<T>{0});
      for (std::size_t i = 0; i < ce.d_logits.size(); ++i) {
        const T g = ce.d_logits[i] * inv;
        const auto row = table.value.row(i);
        for (std::size_t j = 0; j < dh.size(); ++j) dh[j] += static_cast<Wide<T>>(g) * row[j];
        axpy<T>(g, h, table.grad.row(i));
      }
      auto out = d_hidden.row(t);
      for (std::size_t j = 0; j < dh.size(); ++j) out[j] = static_cast<T>(dh[j]);
    }
    if (backprop) model::backward(params, seq, trace, d_hidden);
  }
  return total / static_cast<LossValue<T>>(count);
}

template double pretrain_batch_loss(model::ModelParams<float>&, const data::Batch&, bool);
template double pretrain_batch_loss(model::ModelParams<double>&, const data::Batch&, bool);
template double tune_batch_loss(model::ModelParams<float>&, const data::Batch&, model::Scorer,
                                bool);
template double tune_batch_loss(model::ModelParams<double>&, const data::Batch&, model::Scorer,
                                bool);
template long double pretrain_batch_loss(model::ModelParams<long double>&, const data::Batch&,
                                         bool);
template long double tune_batch_loss(model::ModelParams<long double>&, const data::Batch&,
                                     model::Scorer, bool);

}  // namespace recgpt::training
