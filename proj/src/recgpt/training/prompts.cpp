#include "recgpt/training/prompts.hpp"

#include "recgpt/errors.hpp"

namespace recgpt::training {

PromptEnhancedSequence::PromptEnhancedSequence(data::TaggedSequence seq, std::size_t window)
    : seq_(std::move(seq)), window_(window) {
  if (seq_.items.size() != seq_.segments.size()) {
    throw DimensionError("prompt sequence: items and segments differ in length");
  }
  for (std::size_t i = 0; i < seq_.size(); ++i) {
    if (seq_.segments[i] == Segment::kReal) real_positions_.push_back(i);
  }
}

data::TaggedSequence PromptEnhancedSequence::prefix_through_real(std::size_t n) const {
  if (n == 0 || n > real_positions_.size()) {
    throw IndexError("prefix_through_real: asked for real item " + std::to_string(n) + " of " +
                     std::to_string(real_positions_.size()));
  }
  const auto end = static_cast<std::ptrdiff_t>(real_positions_[n - 1] + 1);
  return {std::vector<ItemId>(seq_.items.begin(), seq_.items.begin() + end),
          std::vector<Segment>(seq_.segments.begin(), seq_.segments.begin() + end)};
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

template <typename T>
PromptEnhancedSequence generate_prompts(const model::ModelParams<T>& params, UserId user,
                                        std::span<const ItemId> seq, std::size_t window,
                                        model::Scorer scorer) {
  if (seq.empty()) throw DataError("generate_prompts: empty sequence");
  data::TaggedSequence out;
  const std::size_t total = seq.size() + (seq.size() - 1) * window;
  out.items.reserve(total);
  out.segments.reserve(total);
  out.items.push_back(seq[0]);
  out.segments.push_back(Segment::kReal);
  const std::size_t max_len = params.dims.max_len;

  for (std::size_t t = 1; t < seq.size(); ++t) {
    for (std::size_t k = 0; k < window; ++k) {
      const std::size_t start = out.size() > max_len ? out.size() - max_len : 0;
      const model::SequenceView view{
          user, std::span<const ItemId>(out.items).subspan(start),
          std::span<const Segment>(out.segments).subspan(start)};
      const auto hidden = model::forward(params, view);
      const auto logits = model::score_items<T>(params, hidden.row(hidden.rows() - 1), scorer);
      out.items.push_back(static_cast<ItemId>(argmax<T>(logits)));
      out.segments.push_back(Segment::kPrompt);
    }
    out.items.push_back(seq[t]);
    out.segments.push_back(Segment::kReal);
  }
  return PromptEnhancedSequence(std::move(out), window);
}

PromptCache PromptCache::build(const model::ModelParams<float>& params,
                               const data::SplitDataset& dataset, std::size_t window,
                               model::Scorer scorer) {
  std::vector<PromptEnhancedSequence> per_user;
  per_user.reserve(dataset.num_users());
  for (std::size_t u = 0; u < dataset.num_users(); ++u) {
    const auto user = static_cast<UserId>(u);
    per_user.push_back(generate_prompts(params, user, dataset.test_history(user), window, scorer));
  }
  return PromptCache(window, std::move(per_user));
}

data::TaggedSequence PromptCache::input_through_real(UserId u, std::size_t n,
                                                     std::size_t max_len) const {
  return data::truncate_last(at(u).prefix_through_real(n), max_len);
}

template std::size_t argmax(std::span<const float>);
template std::size_t argmax(std::span<const double>);
template PromptEnhancedSequence generate_prompts(const model::ModelParams<float>&, UserId,
                                                 std::span<const ItemId>, std::size_t,
                                                 model::Scorer);
template PromptEnhancedSequence generate_prompts(const model::ModelParams<double>&, UserId,
                                                 std::span<const ItemId>, std::size_t,
                                                 model::Scorer);

}  // namespace recgpt::training
