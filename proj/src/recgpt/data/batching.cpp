#include "recgpt/data/batching.hpp"

#include <algorithm>
#include <numeric>

#include "recgpt/errors.hpp"

namespace recgpt::data {

std::vector<ItemId> sorted_unique(std::span<const ItemId> items) {
  std::vector<ItemId> out(items.begin(), items.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<ItemId> sample_negatives(std::span<const ItemId> sorted_history,
                                     std::size_t vocab_size, std::size_t count,
                                     numerics::Rng& rng) {
  if (vocab_size <= sorted_history.size()) {
    throw DataError("sample_negatives: vocabulary exhausted (" + std::to_string(vocab_size) +
                    " items, " + std::to_string(sorted_history.size()) + " in history)");
  }
  std::vector<ItemId> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto cand = static_cast<ItemId>(rng.uniform_index(vocab_size));
    if (!std::binary_search(sorted_history.begin(), sorted_history.end(), cand)) {
      out.push_back(cand);
    }
  }
  return out;
}

TaggedSequence all_real(std::span<const ItemId> items) {
  return {std::vector<ItemId>(items.begin(), items.end()),
          std::vector<Segment>(items.size(), Segment::kReal)};
}

TaggedSequence truncate_last(const TaggedSequence& seq, std::size_t length) {
  if (length < 1) throw ConfigError("truncate_last: length must be at least 1");
  if (seq.items.size() != seq.segments.size()) {
    throw DimensionError("truncate_last: items and segments differ in length");
  }
  if (seq.size() <= length) return seq;
  const auto skip = static_cast<std::ptrdiff_t>(seq.size() - length);
  return {std::vector<ItemId>(seq.items.begin() + skip, seq.items.end()),
          std::vector<Segment>(seq.segments.begin() + skip, seq.segments.end())};
}

void Batch::widen(std::size_t width) {
  if (width <= width_) return;
  const std::size_t old = width_;
  auto regrid = [&](auto& v, auto pad, std::size_t per_cell) {
    using V = std::decay_t<decltype(v)>;
    V grown(rows() * width * per_cell, pad);
    for (std::size_t r = 0; r < rows(); ++r) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(r * old * per_cell),
                v.begin() + static_cast<std::ptrdiff_t>((r + 1) * old * per_cell),
                grown.begin() + static_cast<std::ptrdiff_t>(r * width * per_cell));
    }
    v = std::move(grown);
  };
  regrid(items_, ItemId{0}, 1);
  regrid(segments_, Segment::kReal, 1);
  regrid(positions_, std::int32_t{0}, 1);
  regrid(targets_, kNoTarget, 1);
  regrid(negatives_, kNoTarget, neg_count_);
  width_ = width;
}

void Batch::add_row(UserId user, const TaggedSequence& seq, std::span<const ItemId> targets,
                    std::span<const ItemId> negatives) {
  const std::size_t n = seq.size();
  if (seq.segments.size() != n || targets.size() != n ||
      negatives.size() != n * neg_count_) {
    throw DimensionError("Batch::add_row: row arrays disagree in length");
  }
  widen(n);
  users_.push_back(user);
  lengths_.push_back(n);
  const std::size_t base = items_.size();
  items_.resize(base + width_, 0);
  segments_.resize(base + width_, Segment::kReal);
  positions_.resize(base + width_, 0);
  targets_.resize(base + width_, kNoTarget);
  negatives_.resize((base + width_) * neg_count_, kNoTarget);
  for (std::size_t t = 0; t < n; ++t) {
    items_[base + t] = seq.items[t];
    segments_[base + t] = seq.segments[t];
    positions_[base + t] = static_cast<std::int32_t>(t);
    targets_[base + t] = targets[t];
  }
  std::copy(negatives.begin(), negatives.end(),
            negatives_.begin() + static_cast<std::ptrdiff_t>(base * neg_count_));
}

std::size_t Batch::target_count() const {
  return static_cast<std::size_t>(
      std::count_if(targets_.begin(), targets_.end(), [](ItemId t) { return t != kNoTarget; }));
}

std::vector<std::vector<UserId>> epoch_batches(std::size_t num_users, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<UserId> order(num_users);
  std::iota(order.begin(), order.end(), UserId{0});
  numerics::Rng rng(numerics::Rng::derive(seed, 0x5EED0000ULL + epoch));
  rng.shuffle(std::span<UserId>(order));
  std::vector<std::vector<UserId>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Batch make_pretrain_batch(const SplitDataset& dataset, std::span<const UserId> users,
                          std::span<const std::vector<ItemId>> sorted_histories,
                          std::size_t neg_count, numerics::Rng& rng) {
  Batch batch(neg_count);
  const std::size_t max_len = dataset.max_len();
  for (UserId u : users) {
    auto prefix = dataset.train_prefix(u);
    if (prefix.size() < 2) continue;
    const std::size_t window = std::min(prefix.size(), max_len + 1);
    auto tail = prefix.subspan(prefix.size() - window);
    auto input = all_real(tail.first(window - 1));
    std::vector<ItemId> targets(tail.begin() + 1, tail.end());
    std::vector<ItemId> negatives;
    negatives.reserve(targets.size() * neg_count);
    const auto& hist = sorted_histories[static_cast<std::size_t>(u)];
    for (std::size_t t = 0; t < targets.size(); ++t) {
      auto draw = sample_negatives(hist, dataset.num_items(), neg_count, rng);
      negatives.insert(negatives.end(), draw.begin(), draw.end());
    }
    batch.add_row(u, input, targets, negatives);
  }
  return batch;
}

}  // namespace recgpt::data
