#include "recgpt/pipeline/stages.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "recgpt/data/interactions.hpp"
#include "recgpt/errors.hpp"
#include "recgpt/eval/sweep.hpp"
#include "recgpt/pipeline/artifacts.hpp"
#include "recgpt/pipeline/container.hpp"
#include "recgpt/pipeline/hash.hpp"

namespace recgpt::pipeline {

namespace fs = std::filesystem;

namespace files {
std::string prompts(std::size_t window) { return "prompts_K" + std::to_string(window) + ".rgpt"; }
std::string tuned(std::size_t window) { return "tuned_K" + std::to_string(window) + ".rgpt"; }
std::string tuned_prompts(std::size_t window) {
  return "tuned_prompts_K" + std::to_string(window) + ".rgpt";
}
std::string tune_log(std::size_t window) { return "tune_K" + std::to_string(window) + "_log.csv"; }
std::string eval_text(const std::string& split) { return "eval_" + split + ".txt"; }
std::string eval_csv(const std::string& split) { return "eval_" + split + ".csv"; }
std::string sweep_csv(const std::string& axis) { return "sweep_" + axis + ".csv"; }
}  // namespace files

namespace {

const std::pair<Stage, const char*> kStageNames[] = {
    {Stage::kPreprocess, "preprocess"}, {Stage::kPretrain, "pretrain"},
    {Stage::kGenPrompts, "gen-prompts"}, {Stage::kTune, "tune"},
    {Stage::kEval, "eval"},             {Stage::kSweep, "sweep"},
};

struct Loaded {
  Container container;
  std::string hash;  // file content hash
};

class Run {
 public:
  Run(const RunConfig& config, const StageOptions& options)
      : cfg_(config), opts_(options), dir_(run_directory(config)), hash_(config.hash()) {}

  void preprocess();
  void pretrain();
  void gen_prompts();
  void tune();
  void evaluate();
  void sweep();

 private:
  void log(const std::string& msg) const {
    if (opts_.log) opts_.log(msg);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void claim(const std::vector<std::string>& outputs) const {
    if (opts_.force) return;
    for (const auto& name : outputs) {
      if (fs::exists(path(name))) {
        throw ExistsError(path(name).string() + " already exists (use --force to overwrite)");
      }
    }
  }

  void write_config_snapshot() const {
    fs::create_directories(dir_);
    write_text_atomic(path(files::kConfig), cfg_.canonical_text());
  }

  Loaded load(const std::string& name, const std::string& producer) const {
    if (!fs::exists(path(name))) {
      throw DataError("missing upstream artifact " + path(name).string() + " (run `recgpt " +
                      producer + "` first)");
    }
    const auto bytes = read_file(path(name));
    Loaded l{Container::parse(bytes, path(name).string()), hex64(fnv1a64(bytes))};
    if (l.container.config_hash() != hash_) {
      throw StaleError("stale upstream: " + producer + " artifact " + name +
                       " was built under config " + l.container.config_hash() +
                       ", current config is " + hash_);
    }
    return l;
  }

  static void check_upstream(const Loaded& artifact, const std::string& artifact_stage,
                             const std::string& up_stage, const std::string& up_hash) {
    const auto recorded = upstream(artifact.container, up_stage);
    if (recorded != up_hash) {
      throw StaleError("stale upstream: " + artifact_stage + " artifact was built from a " +
                       up_stage + " output that has since changed (re-run " + artifact_stage +
                       ")");
    }
  }

  const data::SplitDataset& dataset() {
    if (!dataset_) {
      auto l = load(files::kDataset, "preprocess");
      dataset_ = dataset_from(l.container);
      dataset_hash_ = l.hash;
    }
    return *dataset_;
  }

  const model::ModelParams<float>& pretrained() {
    if (!pretrained_) {
      dataset();
      auto l = load(files::kPretrain, "pretrain");
      check_upstream(l, "pretrain", "preprocess", dataset_hash_);
      pretrained_ = params_from(l.container);
      pretrain_hash_ = l.hash;
    }
    return *pretrained_;
  }

  training::PromptCache prompts(std::size_t window, std::string* hash) {
    pretrained();
    auto l = load(files::prompts(window), "gen-prompts");
    check_upstream(l, "gen-prompts", "preprocess", dataset_hash_);
    check_upstream(l, "gen-prompts", "pretrain", pretrain_hash_);
    if (hash) *hash = l.hash;
    return prompts_from(l.container);
  }

  struct TunedArtifacts {
    model::ModelParams<float> params;
    std::optional<training::PromptCache> prompts;
  };

  TunedArtifacts tuned(std::size_t window) {
    pretrained();
    auto l = load(files::tuned(window), "tune");
    check_upstream(l, "tune", "pretrain", pretrain_hash_);
    TunedArtifacts out{params_from(l.container), std::nullopt};
    if (window > 0) {
      auto p = load(files::tuned_prompts(window), "tune");
      check_upstream(p, "tune", "pretrain", pretrain_hash_);
      out.prompts = prompts_from(p.container);
    }
    return out;
  }

  training::TrainOptions train_options(std::size_t epochs, model::Scorer scorer) const {
    training::TrainOptions o;
    o.epochs = epochs;
    o.patience = cfg_.patience();
    o.eval_every = cfg_.eval_every();
    o.scorer = scorer;
    o.loss_positions = cfg_.loss_positions();
    o.tuned = cfg_.tune_params();
    o.regenerate_every = cfg_.regenerate_every();
    o.log = opts_.log;
    return o;
  }

  training::TrainResult run_tune(std::size_t window, const training::PromptCache* cache) {
    auto hyper = cfg_.hyper();
    hyper.prompt_window = window;
    auto o = train_options(cfg_.tune_epochs(), cfg_.scorer());
    o.validator = eval::make_validator(dataset(), cfg_.scorer());
    return training::prompt_tune(dataset(), pretrained(), hyper, o, cache);
  }

  void save_tuned(std::size_t window, const training::TrainResult& r) {
    auto c = params_container(r.params, "tune", hash_);
    set_upstream(c, "pretrain", pretrain_hash_);
    c.meta()["window"] = window;
    put_report(c, r.report);
    c.save(path(files::tuned(window)));
    if (window > 0) {
      auto p = prompts_container(*r.prompts, hash_);
      set_upstream(p, "pretrain", pretrain_hash_);
      p.save(path(files::tuned_prompts(window)));
    }
    write_text_atomic(path(files::tune_log(window)),
                      report_csv(r.report, cfg_.eval_every()));
  }

  std::string split_name() const {
    return cfg_.eval_split() == eval::Split::kValid ? "valid" : "test";
  }

  const RunConfig& cfg_;
  const StageOptions& opts_;
  fs::path dir_;
  std::string hash_;
  std::optional<data::SplitDataset> dataset_;
  std::string dataset_hash_;
  std::optional<model::ModelParams<float>> pretrained_;
  std::string pretrain_hash_;
};

void Run::preprocess() {
  claim({files::kDataset, files::kStatsText, files::kStatsCsv});
  const auto raw = data::ingest_tsv(cfg_.data_path());
  log("read " + std::to_string(raw.size()) + " interactions from " + cfg_.data_path().string());
  auto kept = data::filter_min_timestamp(raw, cfg_.min_timestamp());
  kept = data::kcore_filter(kept, cfg_.kcore_k());
  const auto ds = data::build_splits(kept, std::nullopt, cfg_.hyper().max_len);
  if (ds.num_users() == 0 || ds.num_items() == 0) {
    throw DataError("no interactions left after timestamp and " +
                    std::to_string(cfg_.kcore_k()) + "-core filtering");
  }
  write_config_snapshot();
  const auto stats = data::compute_stats(ds);
  dataset_container(ds, hash_).save(path(files::kDataset));
  write_text_atomic(path(files::kStatsText), stats_text(stats));
  write_text_atomic(path(files::kStatsCsv), stats_csv(stats));
  log(stats_text(stats));
}

void Run::pretrain() {
  claim({files::kPretrain, files::kPretrainLog});
  const auto& ds = dataset();
  auto o = train_options(cfg_.pretrain_epochs(), model::Scorer::kTiedEmbedding);
  o.validator = eval::make_validator(ds, model::Scorer::kTiedEmbedding);
  const auto start = std::chrono::steady_clock::now();
  auto r = training::pretrain(ds, cfg_.hyper(), o);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_config_snapshot();
  auto c = params_container(r.params, "pretrain", hash_);
  set_upstream(c, "preprocess", dataset_hash_);
  put_report(c, r.report);
  c.save(path(files::kPretrain));
  write_text_atomic(path(files::kPretrainLog), report_csv(r.report, cfg_.eval_every()));
  char buf[128];
  std::snprintf(buf, sizeof buf, "pretrain: %zu epochs, best %zu, %.1f s",
                r.report.epoch_losses.size(), r.report.best_epoch, secs);
  log(buf);
}

void Run::gen_prompts() {
  const std::size_t window = cfg_.hyper().prompt_window;
  claim({files::prompts(window)});
  const auto& ds = dataset();
  auto cache = training::PromptCache::build(pretrained(), ds, window, model::Scorer::kOutputLayer);
  cache.config_hash = hash_;
  cache.source_hash = pretrain_hash_;
  auto c = prompts_container(cache, hash_);
  set_upstream(c, "preprocess", dataset_hash_);
  set_upstream(c, "pretrain", pretrain_hash_);
  write_config_snapshot();
  c.save(path(files::prompts(window)));
  log("generated K=" + std::to_string(window) + " prompts for " +
      std::to_string(ds.num_users()) + " users");
}

void Run::tune() {
  const std::size_t window = cfg_.hyper().prompt_window;
  const bool baseline = cfg_.finetune_baseline() && window != 0;
  std::vector<std::string> outputs{files::tuned(window), files::tune_log(window)};
  if (baseline) outputs.push_back(files::tuned(0));
  claim(outputs);
  dataset();
  pretrained();

  std::optional<training::PromptCache> cache;
  if (window > 0) cache = prompts(window, nullptr);
  write_config_snapshot();
  const auto r = run_tune(window, cache ? &*cache : nullptr);
  save_tuned(window, r);
  log("tune K=" + std::to_string(window) + ": best epoch " + std::to_string(r.report.best_epoch));
  if (baseline) {
    const auto b = run_tune(0, nullptr);
    save_tuned(0, b);
    log("tune K=0 baseline: best epoch " + std::to_string(b.report.best_epoch));
  }
}

void Run::evaluate() {
  const std::string split = split_name();
  std::vector<std::string> outputs{files::eval_text(split), files::eval_csv(split)};
  claim(outputs);
  const auto modes = cfg_.eval_modes();
  const std::size_t window = cfg_.hyper().prompt_window;

  eval::EvalContext ctx;
  ctx.dataset = &dataset();
  ctx.tuned_scorer = cfg_.scorer();
  ctx.m = cfg_.recall_m();
  ctx.n = cfg_.recall_n();
  ctx.filter_history = cfg_.filter_history();

  std::optional<TunedArtifacts> tuned_k, tuned_0;
  for (auto mode : modes) {
    switch (mode) {
      case eval::EvalMode::kPretrain:
      case eval::EvalMode::kVariant1:
      case eval::EvalMode::kVariant3:
        ctx.pretrained = &pretrained();
        break;
      case eval::EvalMode::kRecGpt:
      case eval::EvalMode::kRecGpt1:
      case eval::EvalMode::kVariant2:
        if (!tuned_k) tuned_k = tuned(window);
        ctx.tuned = &tuned_k->params;
        ctx.prompts = tuned_k->prompts ? &*tuned_k->prompts : nullptr;
        break;
      case eval::EvalMode::kFinetune:
        if (window == 0) {
          if (!tuned_k) tuned_k = tuned(0);
          ctx.finetuned = &tuned_k->params;
        } else {
          if (!tuned_0) tuned_0 = tuned(0);
          ctx.finetuned = &tuned_0->params;
        }
        break;
    }
  }

  const auto ks = cfg_.k_list();
  std::vector<eval::MetricsReport> reports;
  for (auto mode : modes) {
    auto e = eval::evaluate(ctx, cfg_.eval_split(), mode, ks);
    e.report.config_hash = hash_;
    const std::string tag = eval::mode_name(mode) + "_" + split;
    if (cfg_.dump_recall()) {
      std::ostringstream os;
      eval::write_recall_dump(os, dataset(), e.outcomes);
      write_text_atomic(path("recall_" + tag + ".csv"), os.str());
    }
    if (cfg_.dump_users()) {
      std::ostringstream os;
      eval::write_user_dump(os, dataset(), e.outcomes, ks);
      write_text_atomic(path("users_" + tag + ".csv"), os.str());
    }
    reports.push_back(std::move(e.report));
  }
  std::ostringstream table, csv;
  eval::write_metrics_table(table, reports);
  eval::write_metrics_csv(csv, reports);
  write_config_snapshot();
  write_text_atomic(path(files::eval_text(split)), table.str());
  write_text_atomic(path(files::eval_csv(split)), csv.str());
  log(table.str());
}

void Run::sweep() {
  const std::string axis = cfg_.sweep_axis();
  claim({files::sweep_csv(axis)});
  const std::size_t window = cfg_.hyper().prompt_window;
  const auto mode = cfg_.sweep_mode();

  eval::EvalContext ctx;
  ctx.dataset = &dataset();
  ctx.pretrained = &pretrained();
  ctx.tuned_scorer = cfg_.scorer();
  ctx.m = cfg_.recall_m();
  ctx.n = cfg_.recall_n();
  ctx.filter_history = cfg_.filter_history();

  eval::SweepTable table;
  if (axis == "m_n") {
    const std::size_t k = cfg_.recall_m() + cfg_.recall_n();
    std::vector<std::size_t> ks;
    for (std::size_t kk : cfg_.k_list())
      if (kk <= k) ks.push_back(kk);
    if (ks.empty()) ks.push_back(k);
    std::optional<TunedArtifacts> t;
    if (mode == eval::EvalMode::kRecGpt) {
      t = tuned(window);
      ctx.tuned = &t->params;
      ctx.prompts = t->prompts ? &*t->prompts : nullptr;
    }
    const auto grid = eval::mn_grid(k);
    table = eval::sweep_mn(ctx, cfg_.eval_split(), mode, grid, ks);
  } else {
    auto tune_for = [&](std::size_t K) {
      log("sweep: tuning K=" + std::to_string(K));
      auto r = run_tune(K, nullptr);
      eval::TunedModel out{std::move(r.params), r.prompts ? std::move(*r.prompts)
                                                          : training::PromptCache(0, {})};
      return out;
    };
    const auto grid = cfg_.sweep_k_grid();
    table = eval::sweep_window(ctx, cfg_.eval_split(), mode, grid, tune_for, cfg_.k_list());
  }
  std::ostringstream csv;
  eval::write_sweep_csv(csv, table);
  write_config_snapshot();
  write_text_atomic(path(files::sweep_csv(axis)), csv.str());
  log(csv.str());
}

}  // namespace

std::optional<Stage> parse_stage(const std::string& name) {
  for (const auto& [stage, n] : kStageNames)
    if (name == n) return stage;
  return std::nullopt;
}

std::string stage_name(Stage stage) {
  for (const auto& [s, n] : kStageNames)
    if (s == stage) return n;
  return "unknown";
}

fs::path run_directory(const RunConfig& config) {
  return config.output_dir() / ("run-" + config.hash());
}

void run_stage(const RunConfig& config, Stage stage, const StageOptions& options) {
  config.validate();
  Run run(config, options);
  switch (stage) {
    case Stage::kPreprocess: run.preprocess(); break;
    case Stage::kPretrain: run.pretrain(); break;
    case Stage::kGenPrompts: run.gen_prompts(); break;
    case Stage::kTune: run.tune(); break;
    case Stage::kEval: run.evaluate(); break;
    case Stage::kSweep: run.sweep(); break;
  }
}

}  // namespace recgpt::pipeline
