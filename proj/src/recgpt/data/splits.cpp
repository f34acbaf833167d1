#include "recgpt/data/splits.hpp"

#include <algorithm>
#include <numeric>

#include "recgpt/errors.hpp"

namespace recgpt::data {

std::size_t Catalog::add_user(const std::string& external) {
  auto [it, inserted] = user_index_.try_emplace(external, users_.size());
  if (inserted) users_.push_back(external);
  return it->second;
}

std::size_t Catalog::add_item(const std::string& external) {
  auto [it, inserted] = item_index_.try_emplace(external, items_.size());
  if (inserted) items_.push_back(external);
  return it->second;
}

std::optional<UserId> Catalog::find_user(const std::string& external) const {
  auto it = user_index_.find(external);
  if (it == user_index_.end()) return std::nullopt;
  return static_cast<UserId>(it->second);
}

std::optional<ItemId> Catalog::find_item(const std::string& external) const {
  auto it = item_index_.find(external);
  if (it == item_index_.end()) return std::nullopt;
  return static_cast<ItemId>(it->second);
}

SplitDataset::SplitDataset(Catalog catalog, std::vector<std::vector<ItemId>> sequences,
                           std::size_t max_len)
    : catalog_(std::move(catalog)), sequences_(std::move(sequences)), max_len_(max_len) {
  if (sequences_.size() != catalog_.num_users()) {
    throw DataError("dataset: sequence count does not match user catalog");
  }
  for (const auto& s : sequences_) {
    if (s.size() < 3) throw DataError("dataset: every user needs at least 3 interactions");
    for (ItemId i : s) {
      if (i < 0 || static_cast<std::size_t>(i) >= catalog_.num_items()) {
        throw IndexError("dataset: item id out of catalog range");
      }
    }
  }
  if (max_len_ < 1) throw ConfigError("dataset: max_len must be at least 1");
}

SplitDataset build_splits(const std::vector<Interaction>& interactions,
                          std::optional<std::int64_t> min_ts, std::size_t max_len) {
  std::vector<std::size_t> kept;
  kept.reserve(interactions.size());
  for (std::size_t e = 0; e < interactions.size(); ++e) {
    if (!min_ts || interactions[e].timestamp >= *min_ts) kept.push_back(e);
  }

  // Group by user in order of first appearance.
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t e : kept) {
    auto [it, inserted] = group_of.try_emplace(interactions[e].user_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(e);
  }
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return interactions[a].timestamp < interactions[b].timestamp;
    });
  }
  std::erase_if(groups, [](const auto& g) { return g.size() < 3; });

  // Dense ids follow input order so the result does not depend on hashing.
  std::vector<char> user_kept(interactions.size(), 0);
  for (const auto& g : groups)
    for (std::size_t e : g) user_kept[e] = 1;
  Catalog catalog;
  for (std::size_t e : kept) {
    if (!user_kept[e]) continue;
    catalog.add_user(interactions[e].user_id);
    catalog.add_item(interactions[e].item_id);
  }

  std::vector<std::vector<ItemId>> sequences(groups.size());
  for (const auto& g : groups) {
    const auto u = static_cast<std::size_t>(*catalog.find_user(interactions[g.front()].user_id));
    auto& seq = sequences[u];
    seq.reserve(g.size());
    for (std::size_t e : g) seq.push_back(*catalog.find_item(interactions[e].item_id));
  }
  return SplitDataset(std::move(catalog), std::move(sequences), max_len);
}

DatasetStats compute_stats(const SplitDataset& dataset) {
  DatasetStats s;
  s.users = dataset.num_users();
  s.items = dataset.num_items();
  for (const auto& seq : dataset.sequences()) s.actions += seq.size();
  if (s.users > 0) s.avg_length = static_cast<double>(s.actions) / static_cast<double>(s.users);
  if (s.users > 0 && s.items > 0) {
    s.sparsity = 1.0 - static_cast<double>(s.actions) /
                           (static_cast<double>(s.users) * static_cast<double>(s.items));
  }
  return s;
}

}  // namespace recgpt::data
