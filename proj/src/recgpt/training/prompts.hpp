#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recgpt/data/batching.hpp"
#include "recgpt/data/splits.hpp"
#include "recgpt/model/decoder.hpp"

namespace recgpt::training {

// v1, [K prompts], v2, [K prompts], ..., v_n with REAL/PROMPT tags.
class PromptEnhancedSequence {
 public:
  PromptEnhancedSequence() = default;
  PromptEnhancedSequence(data::TaggedSequence seq, std::size_t window);

  const data::TaggedSequence& sequence() const { return seq_; }
  std::size_t window() const { return window_; }
  std::size_t size() const { return seq_.size(); }
  // 0-based indices of REAL entries.
  const std::vector<std::size_t>& real_positions() const { return real_positions_; }
  std::size_t real_count() const { return real_positions_.size(); }

  // Everything up to and including the n-th REAL item (1-based n).
  data::TaggedSequence prefix_through_real(std::size_t n) const;

  bool operator==(const PromptEnhancedSequence&) const = default;

 private:
  data::TaggedSequence seq_;
  std::size_t window_ = 0;
  std::vector<std::size_t> real_positions_;
};

// Greedy left-to-right prompt generation: before each real item after the
// first, K items are decoded one at a time from the current sequence (last
// max_len entries, with segment tags) by argmax over the scorer's logits and
// appended with the PROMPT tag. K = 0 returns the sequence unchanged.
template <typename T>
PromptEnhancedSequence generate_prompts(const model::ModelParams<T>& params, UserId user,
                                        std::span<const ItemId> seq, std::size_t window,
                                        model::Scorer scorer = model::Scorer::kOutputLayer);

// Index of the largest value; ties resolve to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values);

// Per-user prompt-enhanced test histories (training prefix + validation
// item). Training and validation inputs are prefixes of the same sequence
// because generation only looks left.
class PromptCache {
 public:
  PromptCache() = default;
  PromptCache(std::size_t window, std::vector<PromptEnhancedSequence> per_user)
      : window_(window), per_user_(std::move(per_user)) {}

  static PromptCache build(const model::ModelParams<float>& params,
                           const data::SplitDataset& dataset, std::size_t window,
                           model::Scorer scorer = model::Scorer::kOutputLayer);

  std::size_t window() const { return window_; }
  std::size_t num_users() const { return per_user_.size(); }
  const PromptEnhancedSequence& at(UserId u) const {
    return per_user_.at(static_cast<std::size_t>(u));
  }
  const std::vector<PromptEnhancedSequence>& entries() const { return per_user_; }

  // Input whose last entry is the `n`-th real item, cut to the last max_len.
  data::TaggedSequence input_through_real(UserId u, std::size_t n, std::size_t max_len) const;

  // Provenance stamps so a stale cache can be detected.
  std::string config_hash;
  std::string source_hash;

  bool operator==(const PromptCache& o) const {
    return window_ == o.window_ && per_user_ == o.per_user_;
  }

 private:
  std::size_t window_ = 0;
  std::vector<PromptEnhancedSequence> per_user_;
};

// When to refresh prompts during tuning: never (0, the default) or every E
// epochs from the current parameters.
class RegenerationPolicy {
 public:
  explicit RegenerationPolicy(std::size_t every_epochs = 0) : every_(every_epochs) {}
  std::size_t every() const { return every_; }
  // `epoch` is 0-based; generation before epoch 0 always happens.
  bool due_before(std::size_t epoch) const {
    return epoch == 0 || (every_ > 0 && epoch % every_ == 0);
  }

 private:
  std::size_t every_;
};

}  // namespace recgpt::training
