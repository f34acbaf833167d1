#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recgpt/eval/evaluate.hpp"
#include "recgpt/model/decoder.hpp"
#include "recgpt/model/hyper.hpp"
#include "recgpt/training/trainer.hpp"

namespace recgpt::pipeline {

// Flat `key = value` run configuration. Every key has a default; values are
// normalized on assignment so equal settings always hash equally.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  // ConfigError on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  static std::vector<std::string> keys();

  // Cross-field checks; every stage calls this first.
  void validate() const;

  // Sorted `key = value` lines of every key that affects results.
  std::string canonical_text() const;
  std::string hash() const;  // 16 hex digits

  // Relative data paths resolve against this (the config file's folder).
  std::filesystem::path base_dir;

  std::filesystem::path data_path() const;
  std::optional<std::int64_t> min_timestamp() const;
  std::size_t kcore_k() const;
  model::HyperParams hyper() const;
  std::size_t pretrain_epochs() const;
  std::size_t tune_epochs() const;
  std::size_t patience() const;
  std::size_t eval_every() const;
  std::size_t recall_m() const;
  std::size_t recall_n() const;
  model::Scorer scorer() const;
  training::LossPositions loss_positions() const;
  training::TunedSet tune_params() const;
  std::size_t regenerate_every() const;
  bool filter_history() const;
  std::vector<eval::EvalMode> eval_modes() const;
  eval::Split eval_split() const;
  std::vector<std::size_t> k_list() const;
  std::string sweep_axis() const;
  std::vector<std::size_t> sweep_k_grid() const;
  eval::EvalMode sweep_mode() const;
  std::filesystem::path output_dir() const;
  bool dump_recall() const;
  bool dump_users() const;
  bool finetune_baseline() const;

 private:
  std::size_t uint_value(const std::string& key) const;
  bool bool_value(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace recgpt::pipeline
