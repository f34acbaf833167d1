#include "recgpt/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "recgpt/data/batching.hpp"
#include "recgpt/numerics/adam.hpp"
#include "recgpt/training/losses.hpp"

namespace recgpt::training {
namespace {

constexpr std::uint64_t kPretrainStream = 0x9E7A1000ULL;
constexpr std::uint64_t kTuneStream = 0x7E4E2000ULL;

void say(const TrainOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

class Optimizer {
 public:
  Optimizer(model::ModelParams<float>& params, const std::set<std::string>& frozen, double lr) {
    numerics::AdamOptions opts;
    opts.lr = lr;
    for (auto* p : params.parameters()) {
      if (frozen.count(p->name)) continue;
      slots_.push_back({p, numerics::AdamState(p->value.shape(), opts)});
    }
  }

  void step() {
    for (auto& [param, state] : slots_) numerics::adam_step(*param, state);
  }

 private:
  std::vector<std::pair<numerics::Parameter*, numerics::AdamState>> slots_;
};

// Shared epoch loop: batches, Adam updates, validation-based model selection.
template <typename BatchFn, typename LossFn, typename BeforeEpochFn>
TrainReport run_loop(model::ModelParams<float>& params, std::size_t num_users,
                     const model::HyperParams& hyper, const TrainOptions& options,
                     std::uint64_t stream, const std::set<std::string>& frozen,
                     BatchFn make_batch, LossFn loss_fn, BeforeEpochFn before_epoch,
                     const PromptCache* const* cache_slot) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = hyper.seed;
  Optimizer optimizer(params, frozen, hyper.lr);

  const bool validating = static_cast<bool>(options.validator);
  std::optional<model::ModelParams<float>> best;
  double best_metric = -1.0;
  std::size_t since_best = 0;
  auto validate = [&](std::size_t epochs_done) {
    const double metric = options.validator(params, cache_slot ? *cache_slot : nullptr);
    report.validation.push_back(metric);
    if (!best || metric > best_metric) {
      best_metric = metric;
      best = params;
      report.best_epoch = epochs_done;
      since_best = 0;
    } else {
      since_best += options.eval_every;
    }
  };

  if (options.epochs > 0) before_epoch(0);
  if (validating) validate(0);
  report.best_epoch = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (epoch > 0) before_epoch(epoch);
    const auto batches = data::epoch_batches(num_users, hyper.batch_size,
                                             numerics::Rng::derive(hyper.seed, stream), epoch);
    numerics::Rng rng(numerics::Rng::derive(hyper.seed, stream + 1 + epoch));
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const data::Batch batch = make_batch(batches[b], rng);
      if (batch.target_count() == 0) continue;
      params.zero_grad();
      const double loss = loss_fn(params, batch);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "training diverged: non-finite loss at epoch " << epoch + 1 << ", batch " << b;
        throw NumericalError(os.str());
      }
      optimizer.step();
      loss_sum += loss;
      ++loss_batches;
    }
    params.zero_grad();
    if (!params.all_finite()) {
      throw NumericalError("training diverged: non-finite parameters after epoch " +
                           std::to_string(epoch + 1));
    }
    const double mean_loss = loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0;
    report.epoch_losses.push_back(mean_loss);
    std::ostringstream os;
    os << "epoch " << epoch + 1 << " loss " << mean_loss;

    if (!validating) {
      report.best_epoch = epoch + 1;
    } else if ((epoch + 1) % options.eval_every == 0 || epoch + 1 == options.epochs) {
      validate(epoch + 1);
      os << " valid " << report.validation.back();
      if (options.patience > 0 && since_best >= options.patience) {
        report.stopped_early = true;
        say(options, os.str() + " (early stop)");
        break;
      }
    }
    say(options, os.str());
  }
  if (validating && best) params = std::move(*best);
  report.param_norms = parameter_norms(params);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::set<std::string> frozen_for(const model::ModelParams<float>& params, TunedSet tuned) {
  std::set<std::string> frozen;
  if (tuned == TunedSet::kAll) return frozen;
  for (const auto* p : params.parameters()) {
    if (p->name != "seg_emb" && p->name != "out_layer") frozen.insert(p->name);
  }
  return frozen;
}

TrainResult tune_common(const data::SplitDataset& dataset,
                        const model::ModelParams<float>& pretrained,
                        const model::HyperParams& hyper, const TrainOptions& options,
                        bool with_prompts, const PromptCache* cached) {
  hyper.validate();
  TrainResult result{pretrained, {}, std::nullopt};
  auto& params = result.params;
  params.reset_for_tuning();

  const std::size_t window = hyper.prompt_window;
  const RegenerationPolicy policy(options.regenerate_every);
  std::optional<PromptCache> cache;
  std::size_t generations = 0;
  const PromptCache* active = nullptr;

  auto before_epoch = [&](std::size_t epoch) {
    if (!with_prompts) return;
    if (epoch == 0 && cached) {
      if (cached->window() != window || cached->num_users() != dataset.num_users()) {
        throw DataError("prompt cache does not match the dataset or window K");
      }
      cache = *cached;
    } else if (policy.due_before(epoch)) {
      cache = PromptCache::build(params, dataset, window, options.scorer);
      ++generations;
    }
    active = &*cache;
  };
  if (with_prompts && options.epochs == 0) before_epoch(0);

  auto make_batch = [&](const std::vector<UserId>& users, numerics::Rng&) {
    return make_tune_batch(dataset, users, with_prompts ? active : nullptr,
                           options.loss_positions);
  };
  auto loss_fn = [&](model::ModelParams<float>& p, const data::Batch& batch) {
    return tune_batch_loss(p, batch, options.scorer, true);
  };

  result.report = run_loop(params, dataset.num_users(), hyper, options, kTuneStream,
                           frozen_for(params, options.tuned), make_batch, loss_fn,
                           before_epoch, &active);
  result.report.prompt_generations = generations;
  if (with_prompts) result.prompts = std::move(cache);
  return result;
}

}  // namespace

std::vector<std::pair<std::string, double>> parameter_norms(
    const model::ModelParams<float>& params) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto* p : params.parameters()) {
    double s = 0.0;
    for (float v : p->value.values()) s += static_cast<double>(v) * v;
    out.emplace_back(p->name, std::sqrt(s));
  }
  return out;
}

data::Batch make_tune_batch(const data::SplitDataset& dataset, std::span<const UserId> users,
                            const PromptCache* cache, LossPositions positions) {
  data::Batch batch(0);
  const std::size_t max_len = dataset.max_len();
  for (UserId u : users) {
    const auto train = dataset.train_prefix(u);
    if (train.size() < 2) continue;
    const std::size_t n_input = train.size() - 1;
    data::TaggedSequence input =
        cache ? cache->input_through_real(u, n_input, max_len)
              : data::truncate_last(data::all_real(train.first(n_input)), max_len);
    std::vector<ItemId> targets(input.size(), data::kNoTarget);
    if (positions == LossPositions::kLast) {
      targets.back() = train[n_input];
    } else {
      // Walk real entries from the end: the last one is real item n_input.
      std::size_t real_index = n_input;
      for (std::size_t p = input.size(); p-- > 0;) {
        if (input.segments[p] != Segment::kReal) continue;
        targets[p] = train[real_index];
        --real_index;
      }
    }
    batch.add_row(u, input, targets, {});
  }
  return batch;
}

TrainResult pretrain(const data::SplitDataset& dataset, const model::HyperParams& hyper,
                     const TrainOptions& options) {
  hyper.validate();
  const auto dims = model::ModelDims::from(hyper, dataset.num_users(), dataset.num_items());
  TrainResult result{model::ModelParams<float>::initialize(dims, hyper.seed), {}, std::nullopt};
  auto& params = result.params;

  std::vector<std::vector<ItemId>> histories;
  histories.reserve(dataset.num_users());
  for (const auto& s : dataset.sequences()) histories.push_back(data::sorted_unique(s));

  auto make_batch = [&](const std::vector<UserId>& users, numerics::Rng& rng) {
    return data::make_pretrain_batch(dataset, users, histories, hyper.neg_count, rng);
  };
  auto loss_fn = [](model::ModelParams<float>& p, const data::Batch& batch) {
    return pretrain_batch_loss(p, batch, true);
  };
  result.report = run_loop(params, dataset.num_users(), hyper, options, kPretrainStream,
                           {"seg_emb", "out_layer"}, make_batch, loss_fn,
                           [](std::size_t) {}, nullptr);
  params.reset_for_tuning();
  return result;
}

TrainResult prompt_tune(const data::SplitDataset& dataset,
                        const model::ModelParams<float>& pretrained,
                        const model::HyperParams& hyper, const TrainOptions& options,
                        const PromptCache* cached) {
  return tune_common(dataset, pretrained, hyper, options, true, cached);
}

TrainResult fine_tune(const data::SplitDataset& dataset,
                      const model::ModelParams<float>& pretrained,
                      const model::HyperParams& hyper, const TrainOptions& options) {
  return tune_common(dataset, pretrained, hyper, options, false, nullptr);
}

}  // namespace recgpt::training
