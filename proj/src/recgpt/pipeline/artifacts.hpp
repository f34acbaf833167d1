#pragma once

#include <string>

#include "recgpt/data/splits.hpp"
#include "recgpt/model/params.hpp"
#include "recgpt/pipeline/container.hpp"
#include "recgpt/training/prompts.hpp"
#include "recgpt/training/trainer.hpp"

namespace recgpt::pipeline {

Container dataset_container(const data::SplitDataset& dataset, const std::string& config_hash);
data::SplitDataset dataset_from(const Container& c);

// Tensors are stored under their parameter names; dims go to the manifest.
Container params_container(const model::ModelParams<float>& params, const std::string& stage,
                           const std::string& config_hash);
model::ModelParams<float> params_from(const Container& c);

// Per-user records: user index, window, item ids and segment tags.
Container prompts_container(const training::PromptCache& cache, const std::string& config_hash);
training::PromptCache prompts_from(const Container& c);

// Content hash of an upstream artifact this one was built from.
void set_upstream(Container& c, const std::string& stage, const std::string& hash);
std::string upstream(const Container& c, const std::string& stage);

void put_report(Container& c, const training::TrainReport& report);

// `epoch,loss,validation` with validation empty on epochs without a check.
std::string report_csv(const training::TrainReport& report, std::size_t eval_every);

std::string stats_text(const data::DatasetStats& s);
std::string stats_csv(const data::DatasetStats& s);

}  // namespace recgpt::pipeline
