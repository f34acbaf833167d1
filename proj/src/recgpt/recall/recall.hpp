#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recgpt/data/batching.hpp"
#include "recgpt/model/decoder.hpp"

namespace recgpt::recall {

enum class Provenance { kStep1 = 1, kStep2 = 2 };

struct RecallResult {
  UserId user = 0;
  std::vector<ItemId> items;  // ranked, distinct
  std::vector<float> scores;
  std::vector<Provenance> provenance;

  std::size_t size() const { return items.size(); }
};

// The k best ids by descending score, ties by ascending id. `excluded` must
// be sorted; excluded ids are never returned.
template <typename T>
std::vector<ItemId> top_k(std::span<const T> scores, std::size_t k,
                          std::span<const ItemId> excluded = {});

// Scores the whole catalog from the final hidden state of `input` and keeps
// the top k.
template <typename T>
RecallResult recall_one_step(const model::ModelParams<T>& params, UserId user,
                             const data::TaggedSequence& input, std::size_t k,
                             model::Scorer scorer, std::span<const ItemId> excluded = {});

// Two-step autoregressive recall with k = m + n: the top m come from the
// first pass; its best item is appended with the PROMPT tag, and the second
// pass contributes the n best items not already chosen.
template <typename T>
RecallResult recall_two_step(const model::ModelParams<T>& params, UserId user,
                             const data::TaggedSequence& input, std::size_t k, std::size_t m,
                             std::size_t n, model::Scorer scorer,
                             std::span<const ItemId> excluded = {});

// Final hidden states of `steps` successive passes, each pass appending the
// previous pass's argmax item as a PROMPT entry.
template <typename T>
std::vector<std::vector<T>> interest_vectors(const model::ModelParams<T>& params, UserId user,
                                             const data::TaggedSequence& input,
                                             std::size_t steps, model::Scorer scorer);

}  // namespace recgpt::recall
