#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "recgpt/data/splits.hpp"
#include "recgpt/numerics/rng.hpp"
#include "recgpt/types.hpp"

namespace recgpt::data {

// Uniform draws over [0, vocab_size) minus `sorted_history` (sorted, unique).
// Draws are with replacement; exactly `count` ids are returned.
std::vector<ItemId> sample_negatives(std::span<const ItemId> sorted_history,
                                     std::size_t vocab_size, std::size_t count,
                                     numerics::Rng& rng);

std::vector<ItemId> sorted_unique(std::span<const ItemId> items);

struct TaggedSequence {
  std::vector<ItemId> items;
  std::vector<Segment> segments;

  std::size_t size() const { return items.size(); }
  bool operator==(const TaggedSequence&) const = default;
};

TaggedSequence all_real(std::span<const ItemId> items);

// Keeps the final `length` (item, segment) pairs.
TaggedSequence truncate_last(const TaggedSequence& seq, std::size_t length);

inline constexpr ItemId kNoTarget = -1;

// Rows of variable length, stored padded to `width`. Padding positions carry
// item 0, segment REAL and target kNoTarget, so they never reach a loss.
class Batch {
 public:
  explicit Batch(std::size_t neg_count = 0) : neg_count_(neg_count) {}

  // targets.size() == items.size(); negatives.size() == items.size() * neg_count
  void add_row(UserId user, const TaggedSequence& seq, std::span<const ItemId> targets,
               std::span<const ItemId> negatives);

  std::size_t rows() const { return users_.size(); }
  std::size_t width() const { return width_; }
  std::size_t neg_count() const { return neg_count_; }
  UserId user(std::size_t r) const { return users_[r]; }
  std::size_t length(std::size_t r) const { return lengths_[r]; }

  std::span<const ItemId> items(std::size_t r) const { return {items_.data() + r * width_, lengths_[r]}; }
  std::span<const Segment> segments(std::size_t r) const {
    return {segments_.data() + r * width_, lengths_[r]};
  }
  std::span<const std::int32_t> positions(std::size_t r) const {
    return {positions_.data() + r * width_, lengths_[r]};
  }
  std::span<const ItemId> targets(std::size_t r) const {
    return {targets_.data() + r * width_, lengths_[r]};
  }
  std::span<const ItemId> negatives(std::size_t r, std::size_t t) const {
    return {negatives_.data() + (r * width_ + t) * neg_count_, neg_count_};
  }
  // Number of positions carrying a target across the batch.
  std::size_t target_count() const;

 private:
  void widen(std::size_t width);

  std::size_t neg_count_ = 0;
  std::size_t width_ = 0;
  std::vector<UserId> users_;
  std::vector<std::size_t> lengths_;
  std::vector<ItemId> items_;
  std::vector<Segment> segments_;
  std::vector<std::int32_t> positions_;
  std::vector<ItemId> targets_;
  std::vector<ItemId> negatives_;
};

// User visiting order for one epoch, chunked into batches. A pure function of
// (seed, epoch).
std::vector<std::vector<UserId>> epoch_batches(std::size_t num_users, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch);

// Next-item rows over training prefixes: the last max_len + 1 items give the
// input window and its shifted targets, with `neg_count` negatives per target
// drawn from outside the user's full sequence.
Batch make_pretrain_batch(const SplitDataset& dataset, std::span<const UserId> users,
                          std::span<const std::vector<ItemId>> sorted_histories,
                          std::size_t neg_count, numerics::Rng& rng);

}  // namespace recgpt::data
