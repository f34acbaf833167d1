#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "recgpt/data/interactions.hpp"
#include "recgpt/types.hpp"

namespace recgpt::data {

// Bijection between external string ids and dense indices.
class Catalog {
 public:
  std::size_t add_user(const std::string& external);
  std::size_t add_item(const std::string& external);

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }
  const std::string& user_name(UserId u) const { return users_.at(static_cast<std::size_t>(u)); }
  const std::string& item_name(ItemId i) const { return items_.at(static_cast<std::size_t>(i)); }
  std::optional<UserId> find_user(const std::string& external) const;
  std::optional<ItemId> find_item(const std::string& external) const;

  const std::vector<std::string>& user_names() const { return users_; }
  const std::vector<std::string>& item_names() const { return items_; }

 private:
  std::vector<std::string> users_, items_;
  std::unordered_map<std::string, std::size_t> user_index_, item_index_;
};

// Per-user chronological sequences with leave-one-out targets: the last
// item is the test target, the one before it the validation target, and the
// rest is the training prefix.
class SplitDataset {
 public:
  SplitDataset() = default;
  SplitDataset(Catalog catalog, std::vector<std::vector<ItemId>> sequences,
               std::size_t max_len);

  const Catalog& catalog() const { return catalog_; }
  std::size_t num_users() const { return sequences_.size(); }
  std::size_t num_items() const { return catalog_.num_items(); }
  std::size_t max_len() const { return max_len_; }

  std::span<const ItemId> full_sequence(UserId u) const { return sequences_.at(idx(u)); }
  std::span<const ItemId> train_prefix(UserId u) const {
    const auto& s = sequences_.at(idx(u));
    return {s.data(), s.size() - 2};
  }
  // Everything the model may see when predicting the test target.
  std::span<const ItemId> test_history(UserId u) const {
    const auto& s = sequences_.at(idx(u));
    return {s.data(), s.size() - 1};
  }
  ItemId valid_target(UserId u) const { auto s = full_sequence(u); return s[s.size() - 2]; }
  ItemId test_target(UserId u) const { return full_sequence(u).back(); }

  const std::vector<std::vector<ItemId>>& sequences() const { return sequences_; }

  bool operator==(const SplitDataset& other) const {
    return sequences_ == other.sequences_ && max_len_ == other.max_len_ &&
           catalog_.user_names() == other.catalog_.user_names() &&
           catalog_.item_names() == other.catalog_.item_names();
  }

 private:
  static std::size_t idx(UserId u) { return static_cast<std::size_t>(u); }

  Catalog catalog_;
  std::vector<std::vector<ItemId>> sequences_;
  std::size_t max_len_ = 50;
};

// Sorts each user's interactions by timestamp (stable: ties keep input
// order), drops users with fewer than 3 interactions and assigns dense ids in
// order of first appearance.
SplitDataset build_splits(const std::vector<Interaction>& interactions,
                          std::optional<std::int64_t> min_ts = std::nullopt,
                          std::size_t max_len = 50);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t actions = 0;
  double avg_length = 0.0;
  double sparsity = 0.0;  // 1 - actions / (users * items)
};

DatasetStats compute_stats(const SplitDataset& dataset);

}  // namespace recgpt::data
