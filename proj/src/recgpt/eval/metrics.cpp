#include "recgpt/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>

#include "recgpt/errors.hpp"

namespace recgpt::eval {

std::size_t rank_of(std::span<const ItemId> ranked, ItemId target) {
  const auto it = std::find(ranked.begin(), ranked.end(), target);
  return it == ranked.end() ? 0 : static_cast<std::size_t>(it - ranked.begin()) + 1;
}

int hr_at_k(std::span<const ItemId> ranked, ItemId target, std::size_t k) {
  if (ranked.size() < k) throw DimensionError("hr_at_k: ranking shorter than k");
  const std::size_t r = rank_of(ranked.first(k), target);
  return r > 0 ? 1 : 0;
}

double ndcg_at_k(std::span<const ItemId> ranked, ItemId target, std::size_t k) {
  if (ranked.size() < k) throw DimensionError("ndcg_at_k: ranking shorter than k");
  const std::size_t r = rank_of(ranked.first(k), target);
  return r > 0 ? 1.0 / std::log2(static_cast<double>(r) + 1.0) : 0.0;
}

namespace {
const std::map<EvalMode, std::string>& mode_names() {
  static const std::map<EvalMode, std::string> names{
      {EvalMode::kPretrain, "PRETRAIN"}, {EvalMode::kFinetune, "FINETUNE"},
      {EvalMode::kRecGpt1, "RECGPT1"},   {EvalMode::kRecGpt, "RECGPT"},
      {EvalMode::kVariant1, "VARIANT_1"}, {EvalMode::kVariant2, "VARIANT_2"},
      {EvalMode::kVariant3, "VARIANT_3"},
  };
  return names;
}
}  // namespace

std::string mode_name(EvalMode mode) { return mode_names().at(mode); }

std::optional<EvalMode> parse_mode(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& [mode, n] : mode_names())
    if (n == upper) return mode;
  return std::nullopt;
}

double MetricsReport::get(const std::string& metric, std::size_t k) const {
  for (const auto& v : values)
    if (v.metric == metric && v.k == k) return v.value;
  throw DataError("metrics report has no " + metric + "@" + std::to_string(k));
}

bool MetricsReport::operator==(const MetricsReport& o) const {
  if (mode != o.mode || n_users != o.n_users || values.size() != o.values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].metric != o.values[i].metric || values[i].k != o.values[i].k ||
        values[i].value != o.values[i].value) {
      return false;
    }
  }
  return true;
}

std::vector<MetricValue> aggregate(std::span<const std::size_t> ranks,
                                   std::span<const std::size_t> k_list) {
  std::vector<MetricValue> out;
  const double n = static_cast<double>(ranks.size());
  // Summing by rank histogram makes the result independent of user order.
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t r : ranks)
    if (r > 0) ++hist[r];
  for (std::size_t k : k_list) {
    double hr = 0.0, ndcg = 0.0;
    for (const auto& [r, count] : hist) {
      if (r > k) break;
      hr += static_cast<double>(count);
      ndcg += static_cast<double>(count) / std::log2(static_cast<double>(r) + 1.0);
    }
    out.push_back({"HR", k, ranks.empty() ? 0.0 : hr / n});
    out.push_back({"NDCG", k, ranks.empty() ? 0.0 : ndcg / n});
  }
  return out;
}

void write_metrics_csv(std::ostream& os, std::span<const MetricsReport> reports, bool header) {
  if (header) os << "mode,metric,k,value,n_users\n";
  char buf[64];
  for (const auto& r : reports) {
    for (const auto& v : r.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v.value);
      os << mode_name(r.mode) << ',' << v.metric << ',' << v.k << ',' << buf << ','
         << r.n_users << '\n';
    }
  }
}

void write_metrics_table(std::ostream& os, std::span<const MetricsReport> reports) {
  if (reports.empty()) return;
  const auto& cols = reports.front().values;
  os << std::left << std::setw(12) << "mode";
  for (const auto& c : cols) os << std::right << std::setw(10) << (c.metric + "@" + std::to_string(c.k));
  os << std::right << std::setw(9) << "users" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(12) << mode_name(r.mode);
    for (const auto& v : r.values) os << std::right << std::setw(10) << std::fixed << std::setprecision(4) << v.value;
    os << std::right << std::setw(9) << r.n_users << '\n';
  }
  os.unsetf(std::ios::fixed);
}

}  // namespace recgpt::eval
