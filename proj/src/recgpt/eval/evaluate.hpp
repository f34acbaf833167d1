#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "recgpt/data/splits.hpp"
#include "recgpt/eval/metrics.hpp"
#include "recgpt/model/decoder.hpp"
#include "recgpt/recall/recall.hpp"
#include "recgpt/training/prompts.hpp"
#include "recgpt/training/trainer.hpp"

namespace recgpt::eval {

enum class Split { kValid, kTest };

// Everything a mode may need. Pointers are non-owning; a mode whose
// checkpoint is missing fails with DataError.
struct EvalContext {
  const data::SplitDataset* dataset = nullptr;
  const model::ModelParams<float>* pretrained = nullptr;
  const model::ModelParams<float>* tuned = nullptr;
  const training::PromptCache* prompts = nullptr;  // for `tuned`; null means K = 0
  const model::ModelParams<float>* finetuned = nullptr;
  model::Scorer tuned_scorer = model::Scorer::kOutputLayer;
  std::size_t m = 9;
  std::size_t n = 1;
  bool filter_history = false;
};

struct UserOutcome {
  UserId user = 0;
  ItemId target = 0;
  std::size_t rank = 0;  // 1-based, 0 when outside the list
  recall::RecallResult recall;
};

struct Evaluation {
  MetricsReport report;
  std::vector<UserOutcome> outcomes;  // user-index order
};

Evaluation evaluate(const EvalContext& ctx, Split split, EvalMode mode,
                    std::span<const std::size_t> k_list);

// Model input for user u when predicting the split's target: the plain
// history, or its prompt-enhanced form when a cache is given.
data::TaggedSequence history_input(const data::SplitDataset& dataset,
                                   const training::PromptCache* cache, UserId u, Split split);

// HR@k of one-step recall on the validation split, for early stopping.
training::Validator make_validator(const data::SplitDataset& dataset, model::Scorer scorer,
                                   std::size_t k = 10);

// `user_id,rank,item_id,score,provenance`, external ids.
void write_recall_dump(std::ostream& os, const data::SplitDataset& dataset,
                       std::span<const UserOutcome> outcomes);

// `user_id,target_item,rank` followed by one HR/NDCG column per k.
void write_user_dump(std::ostream& os, const data::SplitDataset& dataset,
                     std::span<const UserOutcome> outcomes, std::span<const std::size_t> k_list);

}  // namespace recgpt::eval
