#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "recgpt/types.hpp"

namespace recgpt::eval {

// 1 iff target is among the first k ranked ids.
int hr_at_k(std::span<const ItemId> ranked, ItemId target, std::size_t k);

// 1 / log2(rank + 1) for a 1-based rank <= k, else 0 (single relevant item).
double ndcg_at_k(std::span<const ItemId> ranked, ItemId target, std::size_t k);

// 1-based position of target in ranked, 0 when absent.
std::size_t rank_of(std::span<const ItemId> ranked, ItemId target);

enum class EvalMode {
  kPretrain,
  kFinetune,
  kRecGpt1,
  kRecGpt,
  kVariant1,
  kVariant2,
  kVariant3,
};

std::string mode_name(EvalMode mode);
std::optional<EvalMode> parse_mode(const std::string& name);

struct MetricValue {
  std::string metric;  // "HR" or "NDCG"
  std::size_t k = 0;
  double value = 0.0;
};

struct MetricsReport {
  EvalMode mode = EvalMode::kPretrain;
  std::vector<MetricValue> values;
  std::size_t n_users = 0;
  std::size_t n_excluded = 0;  // users without an evaluable target
  std::string config_hash;

  double get(const std::string& metric, std::size_t k) const;
  bool operator==(const MetricsReport& o) const;
};

// Mean HR@k and NDCG@k over users, given each user's 1-based target rank
// (0 = missed).
std::vector<MetricValue> aggregate(std::span<const std::size_t> ranks,
                                   std::span<const std::size_t> k_list);

// `mode,metric,k,value,n_users`
void write_metrics_csv(std::ostream& os, std::span<const MetricsReport> reports,
                       bool header = true);
void write_metrics_table(std::ostream& os, std::span<const MetricsReport> reports);

}  // namespace recgpt::eval
