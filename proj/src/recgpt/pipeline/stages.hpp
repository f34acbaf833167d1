#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "recgpt/pipeline/config.hpp"

namespace recgpt::pipeline {

enum class Stage { kPreprocess, kPretrain, kGenPrompts, kTune, kEval, kSweep };

std::optional<Stage> parse_stage(const std::string& name);
std::string stage_name(Stage stage);

struct StageOptions {
  bool force = false;
  std::function<void(const std::string&)> log;
};

// output_dir/run-<config hash>
std::filesystem::path run_directory(const RunConfig& config);

// Validates the config, checks the upstream chain and writes the stage's
// artifacts into the run directory.
void run_stage(const RunConfig& config, Stage stage, const StageOptions& options = {});

// Artifact file names inside a run directory.
namespace files {
inline const char* kConfig = "config.txt";
inline const char* kDataset = "dataset.rgpt";
inline const char* kStatsText = "stats.txt";
inline const char* kStatsCsv = "stats.csv";
inline const char* kPretrain = "pretrain.rgpt";
inline const char* kPretrainLog = "pretrain_log.csv";
std::string prompts(std::size_t window);
std::string tuned(std::size_t window);
std::string tuned_prompts(std::size_t window);
std::string tune_log(std::size_t window);
std::string eval_text(const std::string& split);
std::string eval_csv(const std::string& split);
std::string sweep_csv(const std::string& axis);
}  // namespace files

}  // namespace recgpt::pipeline
