#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recgpt/data/splits.hpp"
#include "recgpt/model/decoder.hpp"
#include "recgpt/model/hyper.hpp"
#include "recgpt/training/prompts.hpp"

namespace recgpt::training {

enum class LossPositions {
  kLast,     // one target: the item after the final real position
  kAllReal,  // every real position predicts the next real item
};

enum class TunedSet {
  kAll,         // every parameter
  kPromptOnly,  // segment table and output layer only
};

// Higher is better. The cache argument is null when inputs carry no prompts.
using Validator =
    std::function<double(const model::ModelParams<float>&, const PromptCache*)>;

struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t patience = 10;  // epochs without validation gain; 0 disables
  std::size_t eval_every = 1;
  model::Scorer scorer = model::Scorer::kOutputLayer;
  LossPositions loss_positions = LossPositions::kLast;
  TunedSet tuned = TunedSet::kAll;
  std::size_t regenerate_every = 0;
  Validator validator;
  std::function<void(const std::string&)> log;
};

struct TrainReport {
  std::vector<double> epoch_losses;
  std::vector<double> validation;  // entry 0 is the pre-training-step value
  std::size_t best_epoch = 0;      // number of epochs behind the returned params
  bool stopped_early = false;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, double>> param_norms;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t prompt_generations = 0;
};

struct TrainResult {
  model::ModelParams<float> params;
  TrainReport report;
  std::optional<PromptCache> prompts;  // final prompts used by prompt_tune
};

// Stage 1: next-item BCE with sampled negatives over training prefixes. The
// segment table and output layer stay frozen; on return the output layer is
// a copy of the item table and the segment table is zero.
TrainResult pretrain(const data::SplitDataset& dataset, const model::HyperParams& hyper,
                     const TrainOptions& options);

// Stage 2: cross-entropy over prompt-enhanced inputs with K =
// hyper.prompt_window. Prompts come from `cached` when given, otherwise they
// are generated from `pretrained` (after the tuning reset).
TrainResult prompt_tune(const data::SplitDataset& dataset,
                        const model::ModelParams<float>& pretrained,
                        const model::HyperParams& hyper, const TrainOptions& options,
                        const PromptCache* cached = nullptr);

// Stage 2 on the plain sequences, no prompt generation involved.
TrainResult fine_tune(const data::SplitDataset& dataset,
                      const model::ModelParams<float>& pretrained,
                      const model::HyperParams& hyper, const TrainOptions& options);

// One batch of tuning rows for `users`, inputs built from the cache (or plain
// sequences when cache is null).
data::Batch make_tune_batch(const data::SplitDataset& dataset, std::span<const UserId> users,
                            const PromptCache* cache, LossPositions positions);

std::vector<std::pair<std::string, double>> parameter_norms(
    const model::ModelParams<float>& params);

}  // namespace recgpt::training
