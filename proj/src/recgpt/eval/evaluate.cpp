#include "recgpt/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "recgpt/errors.hpp"

namespace recgpt::eval {
namespace {

struct ModeSetup {
  const model::ModelParams<float>* params = nullptr;
  const training::PromptCache* cache = nullptr;
  model::Scorer scorer = model::Scorer::kTiedEmbedding;
  bool two_step = false;
};

const model::ModelParams<float>& require(const model::ModelParams<float>* p, EvalMode mode,
                                         const char* what) {
  if (!p) throw DataError("evaluate " + mode_name(mode) + ": missing " + what + " checkpoint");
  return *p;
}

ModeSetup setup_for(const EvalContext& ctx, EvalMode mode) {
  ModeSetup s;
  switch (mode) {
    case EvalMode::kPretrain:
    case EvalMode::kVariant3:
      s.params = &require(ctx.pretrained, mode, "pre-trained");
      break;
    case EvalMode::kVariant1:
      s.params = &require(ctx.pretrained, mode, "pre-trained");
      s.two_step = true;
      break;
    case EvalMode::kRecGpt1:
    case EvalMode::kVariant2:
      s.params = &require(ctx.tuned, mode, "prompt-tuned");
      s.cache = ctx.prompts;
      s.scorer = ctx.tuned_scorer;
      break;
    case EvalMode::kRecGpt:
      s.params = &require(ctx.tuned, mode, "prompt-tuned");
      s.cache = ctx.prompts;
      s.scorer = ctx.tuned_scorer;
      s.two_step = true;
      break;
    case EvalMode::kFinetune:
      s.params = &require(ctx.finetuned, mode, "fine-tuned");
      s.scorer = ctx.tuned_scorer;
      break;
  }
  return s;
}

ItemId target_of(const data::SplitDataset& dataset, UserId u, Split split) {
  return split == Split::kValid ? dataset.valid_target(u) : dataset.test_target(u);
}

const char* provenance_name(recall::Provenance p) {
  return p == recall::Provenance::kStep1 ? "STEP1" : "STEP2";
}

}  // namespace

data::TaggedSequence history_input(const data::SplitDataset& dataset,
                                   const training::PromptCache* cache, UserId u, Split split) {
  const auto full = dataset.full_sequence(u);
  const std::size_t n_hist = split == Split::kValid ? full.size() - 2 : full.size() - 1;
  if (cache && cache->window() > 0) return cache->input_through_real(u, n_hist, dataset.max_len());
  return data::truncate_last(data::all_real(full.first(n_hist)), dataset.max_len());
}

Evaluation evaluate(const EvalContext& ctx, Split split, EvalMode mode,
                    std::span<const std::size_t> k_list) {
  if (!ctx.dataset) throw DataError("evaluate: no dataset");
  if (k_list.empty()) throw ConfigError("evaluate: empty k list");
  const auto& dataset = *ctx.dataset;
  const ModeSetup s = setup_for(ctx, mode);
  if (s.cache && s.cache->window() > 0 && s.cache->num_users() != dataset.num_users()) {
    throw DataError("evaluate: prompt cache covers " + std::to_string(s.cache->num_users()) +
                    " users, dataset has " + std::to_string(dataset.num_users()));
  }

  const std::size_t k_max = *std::max_element(k_list.begin(), k_list.end());
  if (k_max == 0) throw ConfigError("evaluate: k must be positive");
  if (s.two_step) {
    if (ctx.m < 1) throw ConfigError("evaluate: recall m must be at least 1");
    if (k_max > ctx.m + ctx.n) {
      throw ConfigError("evaluate: k = " + std::to_string(k_max) + " exceeds m + n = " +
                        std::to_string(ctx.m + ctx.n));
    }
  }

  Evaluation result;
  result.outcomes.reserve(dataset.num_users());
  std::vector<std::size_t> ranks;
  ranks.reserve(dataset.num_users());
  for (std::size_t ui = 0; ui < dataset.num_users(); ++ui) {
    const auto u = static_cast<UserId>(ui);
    const auto input = history_input(dataset, s.cache, u, split);
    std::vector<ItemId> excluded;
    if (ctx.filter_history) {
      const auto full = dataset.full_sequence(u);
      const std::size_t n_hist = split == Split::kValid ? full.size() - 2 : full.size() - 1;
      excluded = data::sorted_unique(full.first(n_hist));
    }
    UserOutcome out;
    out.user = u;
    out.target = target_of(dataset, u, split);
    out.recall = s.two_step ? recall::recall_two_step(*s.params, u, input, ctx.m + ctx.n, ctx.m,
                                                      ctx.n, s.scorer, excluded)
                            : recall::recall_one_step(*s.params, u, input, k_max, s.scorer,
                                                      excluded);
    out.rank = rank_of(out.recall.items, out.target);
    ranks.push_back(out.rank);
    result.outcomes.push_back(std::move(out));
  }
  result.report.mode = mode;
  result.report.n_users = ranks.size();
  result.report.values = aggregate(ranks, k_list);
  return result;
}

training::Validator make_validator(const data::SplitDataset& dataset, model::Scorer scorer,
                                   std::size_t k) {
  return [&dataset, scorer, k](const model::ModelParams<float>& params,
                               const training::PromptCache* cache) {
    std::size_t hits = 0;
    for (std::size_t ui = 0; ui < dataset.num_users(); ++ui) {
      const auto u = static_cast<UserId>(ui);
      const auto input = history_input(dataset, cache, u, Split::kValid);
      const auto r = recall::recall_one_step(params, u, input, k, scorer);
      hits += static_cast<std::size_t>(hr_at_k(r.items, dataset.valid_target(u), k));
    }
    return dataset.num_users() == 0 ? 0.0
                                    : static_cast<double>(hits) /
                                          static_cast<double>(dataset.num_users());
  };
}

void write_recall_dump(std::ostream& os, const data::SplitDataset& dataset,
                       std::span<const UserOutcome> outcomes) {
  os << "user_id,rank,item_id,score,provenance\n";
  char buf[64];
  for (const auto& o : outcomes) {
    const auto& user = dataset.catalog().user_name(o.user);
    for (std::size_t i = 0; i < o.recall.items.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(o.recall.scores[i]));
      os << user << ',' << i + 1 << ',' << dataset.catalog().item_name(o.recall.items[i]) << ','
         << buf << ',' << provenance_name(o.recall.provenance[i]) << '\n';
    }
  }
}

void write_user_dump(std::ostream& os, const data::SplitDataset& dataset,
                     std::span<const UserOutcome> outcomes, std::span<const std::size_t> k_list) {
  os << "user_id,target_item,rank";
  for (std::size_t k : k_list) os << ",HR@" << k << ",NDCG@" << k;
  os << '\n';
  char buf[64];
  for (const auto& o : outcomes) {
    os << dataset.catalog().user_name(o.user) << ',' << dataset.catalog().item_name(o.target)
       << ',' << o.rank;
    for (std::size_t k : k_list) {
      const bool hit = o.rank > 0 && o.rank <= k;
      std::snprintf(buf, sizeof buf, "%.17g",
                    hit ? 1.0 / std::log2(static_cast<double>(o.rank) + 1.0) : 0.0);
      os << ',' << (hit ? 1 : 0) << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace recgpt::eval
