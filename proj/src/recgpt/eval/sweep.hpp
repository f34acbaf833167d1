#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recgpt/eval/evaluate.hpp"

namespace recgpt::eval {

struct SweepPoint {
  std::string label;  // "K=2" or "9_1"
  std::size_t window = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  MetricsReport report;
};

struct SweepTable {
  std::string axis;  // "K" or "m_n"
  std::vector<SweepPoint> points;
};

// (k,0), (k-1,1), ..., down to the even split.
std::vector<std::pair<std::size_t, std::size_t>> mn_grid(std::size_t k = 10);

// 0, 1, ..., max_window.
std::vector<std::size_t> window_grid(std::size_t max_window = 6);

// Re-evaluates one tuned checkpoint under each recall split. `mode` is
// RECGPT or VARIANT_1.
SweepTable sweep_mn(const EvalContext& ctx, Split split, EvalMode mode,
                    std::span<const std::pair<std::size_t, std::size_t>> grid,
                    std::span<const std::size_t> k_list);

struct TunedModel {
  model::ModelParams<float> params;
  training::PromptCache prompts;
};
using TuneForWindow = std::function<TunedModel(std::size_t window)>;

// Tunes a fresh model per window size and evaluates it with `mode`.
SweepTable sweep_window(const EvalContext& base, Split split, EvalMode mode,
                        std::span<const std::size_t> grid, const TuneForWindow& tune,
                        std::span<const std::size_t> k_list);

// `axis,point,mode,metric,k,value,n_users`
void write_sweep_csv(std::ostream& os, const SweepTable& table);

}  // namespace recgpt::eval
