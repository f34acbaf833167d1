#include "recgpt/recall/recall.hpp"

#include <algorithm>
#include <numeric>

#include "recgpt/errors.hpp"

namespace recgpt::recall {
namespace {

template <typename T>
std::vector<T> last_hidden(const model::ModelParams<T>& params, UserId user,
                           const data::TaggedSequence& input) {
  const auto window = data::truncate_last(input, params.dims.max_len);
  const auto hidden = model::forward(params, model::SequenceView{user, window.items, window.segments});
  const auto row = hidden.row(hidden.rows() - 1);
  return {row.begin(), row.end()};
}

template <typename T>
void append_ranked(RecallResult& out, std::span<const ItemId> ids, std::span<const T> scores,
                   Provenance provenance) {
  for (ItemId id : ids) {
    out.items.push_back(id);
    out.scores.push_back(static_cast<float>(scores[static_cast<std::size_t>(id)]));
    out.provenance.push_back(provenance);
  }
}

}  // namespace

template <typename T>
std::vector<ItemId> top_k(std::span<const T> scores, std::size_t k,
                          std::span<const ItemId> excluded) {
  std::vector<ItemId> ids;
  ids.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto id = static_cast<ItemId>(i);
    if (!std::binary_search(excluded.begin(), excluded.end(), id)) ids.push_back(id);
  }
  if (k > ids.size()) {
    throw DimensionError("top_k: asked for " + std::to_string(k) + " items but only " +
                         std::to_string(ids.size()) + " are eligible");
  }
  auto better = [&](ItemId a, ItemId b) {
    const T sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
  ids.resize(k);
  return ids;
}

template <typename T>
RecallResult recall_one_step(const model::ModelParams<T>& params, UserId user,
                             const data::TaggedSequence& input, std::size_t k,
                             model::Scorer scorer, std::span<const ItemId> excluded) {
  const auto h = last_hidden(params, user, input);
  const auto logits = model::score_items<T>(params, h, scorer);
  RecallResult out;
  out.user = user;
  append_ranked<T>(out, top_k<T>(logits, k, excluded), logits, Provenance::kStep1);
  return out;
}

template <typename T>
RecallResult recall_two_step(const model::ModelParams<T>& params, UserId user,
                             const data::TaggedSequence& input, std::size_t k, std::size_t m,
                             std::size_t n, model::Scorer scorer,
                             std::span<const ItemId> excluded) {
  if (m < 1) throw ConfigError("two-step recall needs m >= 1");
  if (m + n != k) {
    throw ConfigError("two-step recall: m + n = " + std::to_string(m + n) +
                      " does not equal k = " + std::to_string(k));
  }
  RecallResult out = recall_one_step(params, user, input, m, scorer, excluded);
  if (n == 0) return out;

  data::TaggedSequence extended = input;
  extended.items.push_back(out.items.front());
  extended.segments.push_back(Segment::kPrompt);
  const auto h2 = last_hidden(params, user, extended);
  const auto logits2 = model::score_items<T>(params, h2, scorer);

  std::vector<ItemId> taken(excluded.begin(), excluded.end());
  taken.insert(taken.end(), out.items.begin(), out.items.end());
  std::sort(taken.begin(), taken.end());
  taken.erase(std::unique(taken.begin(), taken.end()), taken.end());
  append_ranked<T>(out, top_k<T>(logits2, n, taken), logits2, Provenance::kStep2);
  return out;
}

template <typename T>
std::vector<std::vector<T>> interest_vectors(const model::ModelParams<T>& params, UserId user,
                                             const data::TaggedSequence& input,
                                             std::size_t steps, model::Scorer scorer) {
  if (steps < 1) throw ConfigError("interest_vectors needs steps >= 1");
  std::vector<std::vector<T>> out;
  data::TaggedSequence current = input;
  for (std::size_t s = 0; s < steps; ++s) {
    out.push_back(last_hidden(params, user, current));
    if (s + 1 == steps) break;
    const auto logits = model::score_items<T>(params, out.back(), scorer);
    current.items.push_back(top_k<T>(logits, 1).front());
    current.segments.push_back(Segment::kPrompt);
  }
  return out;
}

#define RECGPT_INSTANTIATE_RECALL(T)                                                          \
  template std::vector<ItemId> top_k(std::span<const T>, std::size_t,                         \
                                     std::span<const ItemId>);                                \
  template RecallResult recall_one_step(const model::ModelParams<T>&, UserId,                 \
                                        const data::TaggedSequence&, std::size_t,             \
                                        model::Scorer, std::span<const ItemId>);              \
  template RecallResult recall_two_step(const model::ModelParams<T>&, UserId,                 \
                                        const data::TaggedSequence&, std::size_t, std::size_t, \
                                        std::size_t, model::Scorer, std::span<const ItemId>); \
  template std::vector<std::vector<T>> interest_vectors(                                     \
      const model::ModelParams<T>&, UserId, const data::TaggedSequence&, std::size_t,        \
      model::Scorer);

RECGPT_INSTANTIATE_RECALL(float)
RECGPT_INSTANTIATE_RECALL(double)

#undef RECGPT_INSTANTIATE_RECALL

}  // namespace recgpt::recall
