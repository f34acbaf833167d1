#pragma once

#include <span>
#include <vector>

#include "recgpt/model/params.hpp"
#include "recgpt/types.hpp"

namespace recgpt::model {

// One input sequence: every position gets the user's vector, its item, its
// position (0-based within the window) and its segment tag.
struct SequenceView {
  UserId user = 0;
  std::span<const ItemId> items;
  std::span<const Segment> segments;
};

enum class Scorer {
  kTiedEmbedding,  // logits = item_emb * h
  kOutputLayer,    // logits = out_layer * h
};

template <typename T>
struct LayerTrace {
  numerics::BasicTensor<T> input;
  numerics::BasicTensor<T> q, k, v;                 // L x d
  std::vector<numerics::BasicTensor<T>> probs;      // per head, L x L
  numerics::BasicTensor<T> heads;                   // concatenated head outputs, L x d
  numerics::BasicTensor<T> merged;                  // S = heads * ws
  numerics::BasicTensor<T> pre_act;                 // S * w1 + b1
  numerics::BasicTensor<T> act;                     // relu(pre_act)
};

template <typename T>
struct ForwardTrace {
  numerics::BasicTensor<T> embedded;  // h^0
  std::vector<LayerTrace<T>> layers;
};

// h0[t] = user_emb[user] + item_emb[items[t]] + pos_emb[t] + seg_emb[segments[t]]
template <typename T>
numerics::BasicTensor<T> embed_input(const ModelParams<T>& params, const SequenceView& seq);

// Masked multi-head self-attention followed by the two-layer ReLU FFN. The
// attention logits are scaled by 1/sqrt(d) with d the full model width.
template <typename T>
numerics::BasicTensor<T> decoder_block(const ModelParams<T>& params, std::size_t layer,
                                       const numerics::BasicTensor<T>& input,
                                       LayerTrace<T>* trace = nullptr);

// embed_input followed by all decoder blocks; returns L x d hidden states.
template <typename T>
numerics::BasicTensor<T> forward(const ModelParams<T>& params, const SequenceView& seq,
                                 ForwardTrace<T>* trace = nullptr);

// Accumulates parameter gradients for upstream d_hidden (L x d).
template <typename T>
void backward(ModelParams<T>& params, const SequenceView& seq, const ForwardTrace<T>& trace,
              const numerics::BasicTensor<T>& d_hidden);

template <typename T>
const numerics::BasicParameter<T>& scorer_table(const ModelParams<T>& params, Scorer scorer);

template <typename T>
numerics::BasicParameter<T>& scorer_table(ModelParams<T>& params, Scorer scorer);

// Raw logits over the whole catalog for one hidden vector.
template <typename T>
std::vector<T> score_items(const ModelParams<T>& params, std::span<const T> hidden,
                           Scorer scorer);

}  // namespace recgpt::model
