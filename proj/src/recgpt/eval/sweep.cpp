#include "recgpt/eval/sweep.hpp"

#include <cstdio>

#include "recgpt/errors.hpp"

namespace recgpt::eval {

std::vector<std::pair<std::size_t, std::size_t>> mn_grid(std::size_t k) {
  if (k < 1) throw ConfigError("mn_grid: k must be at least 1");
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (std::size_t n = 0; n <= k / 2; ++n) grid.emplace_back(k - n, n);
  return grid;
}

std::vector<std::size_t> window_grid(std::size_t max_window) {
  std::vector<std::size_t> grid(max_window + 1);
  for (std::size_t K = 0; K <= max_window; ++K) grid[K] = K;
  return grid;
}

SweepTable sweep_mn(const EvalContext& ctx, Split split, EvalMode mode,
                    std::span<const std::pair<std::size_t, std::size_t>> grid,
                    std::span<const std::size_t> k_list) {
  if (mode != EvalMode::kRecGpt && mode != EvalMode::kVariant1) {
    throw ConfigError("m_n sweep needs a two-step mode, got " + mode_name(mode));
  }
  SweepTable table{"m_n", {}};
  for (const auto& [m, n] : grid) {
    EvalContext c = ctx;
    c.m = m;
    c.n = n;
    SweepPoint p;
    p.label = std::to_string(m) + "_" + std::to_string(n);
    p.window = ctx.prompts ? ctx.prompts->window() : 0;
    p.m = m;
    p.n = n;
    p.report = evaluate(c, split, mode, k_list).report;
    table.points.push_back(std::move(p));
  }
  return table;
}

SweepTable sweep_window(const EvalContext& base, Split split, EvalMode mode,
                        std::span<const std::size_t> grid, const TuneForWindow& tune,
                        std::span<const std::size_t> k_list) {
  SweepTable table{"K", {}};
  for (std::size_t K : grid) {
    const TunedModel tuned = tune(K);
    EvalContext c = base;
    c.tuned = &tuned.params;
    c.prompts = &tuned.prompts;
    SweepPoint p;
    p.label = "K=" + std::to_string(K);
    p.window = K;
    p.m = base.m;
    p.n = base.n;
    p.report = evaluate(c, split, mode, k_list).report;
    table.points.push_back(std::move(p));
  }
  return table;
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  os << "axis,point,mode,metric,k,value,n_users\n";
  char buf[64];
  for (const auto& p : table.points) {
    for (const auto& v : p.report.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v.value);
      os << table.axis << ',' << p.label << ',' << mode_name(p.report.mode) << ',' << v.metric
         << ',' << v.k << ',' << buf << ',' << p.report.n_users << '\n';
    }
  }
}

}  // namespace recgpt::eval
