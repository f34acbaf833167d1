#pragma once

#include <type_traits>

#include "recgpt/data/batching.hpp"
#include "recgpt/model/decoder.hpp"

namespace recgpt::training {

// Loss values are reported in double, or wider when the model itself is wider.
template <typename T>
using LossValue = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

// Next-item binary cross-entropy over every targeted position of the batch:
// -log sigmoid(h_t . e_pos) - sum_neg log(1 - sigmoid(h_t . e_neg)), scored
// against the item table and averaged over targeted positions. With
// `backprop` the gradient of that mean is accumulated into params.
template <typename T>
LossValue<T> pretrain_batch_loss(model::ModelParams<T>& params, const data::Batch& batch,
                           bool backprop);

// Softmax cross-entropy over the whole catalog at every targeted position,
// averaged over targeted positions.
template <typename T>
LossValue<T> tune_batch_loss(model::ModelParams<T>& params, const data::Batch& batch,
                       model::Scorer scorer, bool backprop);

}  // namespace recgpt::training
