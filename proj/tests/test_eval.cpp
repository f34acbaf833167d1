#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "recgpt/errors.hpp"
#include "recgpt/eval/evaluate.hpp"
#include "recgpt/eval/metrics.hpp"
#include "recgpt/eval/sweep.hpp"
#include "support/synthetic.hpp"

using namespace recgpt;
using namespace recgpt::eval;
using model::ModelParams;
using model::Scorer;
using numerics::Rng;

namespace {

const std::vector<std::size_t> kK{5, 10};

struct Fixture {
  data::SplitDataset data = synth::cyclic(20, 15, 8, 5);
  model::ModelDims dims = synth::small_dims(20, 15, 4, 2, 1, 6, 50);
  ModelParams<float> pre = synth::random_params<float>(dims, 1, 0.5);
  ModelParams<float> tuned = synth::random_params<float>(dims, 2, 0.5);
  ModelParams<float> fine = synth::random_params<float>(dims, 3, 0.5);
  training::PromptCache cache = training::PromptCache::build(tuned, data, 2);

  EvalContext ctx() const {
    EvalContext c;
    c.dataset = &data;
    c.pretrained = &pre;
    c.tuned = &tuned;
    c.prompts = &cache;
    c.finetuned = &fine;
    return c;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

bool same_values(const MetricsReport& a, const MetricsReport& b) {
  if (a.values.size() != b.values.size() || a.n_users != b.n_users) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i].metric != b.values[i].metric || a.values[i].k != b.values[i].k ||
        a.values[i].value != b.values[i].value)
      return false;
  return true;
}

}  // namespace

TEST_CASE("hit ratio and NDCG examples") {
  const std::vector<ItemId> ranked{7, 3, 9, 1, 4, 8, 2};
  CHECK(hr_at_k(ranked, 7, 5) == 1);
  CHECK(hr_at_k(ranked, 8, 5) == 0);
  CHECK(ndcg_at_k(ranked, 7, 5) == 1.0);
  CHECK(ndcg_at_k(ranked, 9, 5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ndcg_at_k(ranked, 8, 5) == 0.0);
  CHECK(rank_of(ranked, 4) == 5);
  CHECK(rank_of(ranked, 42) == 0);
  CHECK_THROWS_AS(hr_at_k(ranked, 7, 8), DimensionError);
}

TEST_CASE("NDCG matches the direct formula over 1000 random rankings") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    std::vector<ItemId> ranked(n);
    for (std::size_t i = 0; i < n; ++i) ranked[i] = static_cast<ItemId>(i);
    rng.shuffle(std::span<ItemId>(ranked));
    const auto target = static_cast<ItemId>(rng.uniform_index(n + 3));
    const std::size_t k = 1 + rng.uniform_index(n);
    double expected = 0.0;
    int hit = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (ranked[i] == target) {
        expected = std::log(2.0) / std::log(static_cast<double>(i) + 2.0);
        hit = 1;
      }
    }
    CHECK(ndcg_at_k(ranked, target, k) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(hr_at_k(ranked, target, k) == hit);
  }
}

TEST_CASE("aggregate equals a brute-force count and ignores user order") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> ranks(1 + rng.uniform_index(200));
    for (auto& r : ranks) r = rng.uniform_index(15);
    const auto values = aggregate(ranks, kK);
    REQUIRE(values.size() == 4);
    for (std::size_t ki = 0; ki < kK.size(); ++ki) {
      const std::size_t k = kK[ki];
      std::size_t hits = 0;
      double ndcg = 0.0;
      for (std::size_t r : ranks) {
        if (r >= 1 && r <= k) {
          ++hits;
          ndcg += 1.0 / std::log2(r + 1.0);
        }
      }
      CHECK(values[2 * ki].metric == "HR");
      CHECK(values[2 * ki].k == k);
      CHECK(values[2 * ki].value == static_cast<double>(hits) / ranks.size());
      CHECK(values[2 * ki + 1].metric == "NDCG");
      CHECK(values[2 * ki + 1].value == doctest::Approx(ndcg / ranks.size()).epsilon(1e-14));
    }
    auto shuffled = ranks;
    rng.shuffle(std::span<std::size_t>(shuffled));
    const auto again = aggregate(shuffled, kK);
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(again[i].value == values[i].value);
  }
}

TEST_CASE("mode names round trip") {
  for (auto m : {EvalMode::kPretrain, EvalMode::kFinetune, EvalMode::kRecGpt1, EvalMode::kRecGpt,
                 EvalMode::kVariant1, EvalMode::kVariant2, EvalMode::kVariant3}) {
    CHECK(parse_mode(mode_name(m)) == m);
  }
  CHECK(parse_mode("recgpt1") == EvalMode::kRecGpt1);
  CHECK_FALSE(parse_mode("BEST").has_value());
}

TEST_CASE("mode aliases give identical reports") {
  const Fixture f;
  const auto ctx = f.ctx();
  for (auto split : {Split::kValid, Split::kTest}) {
    CHECK(same_values(evaluate(ctx, split, EvalMode::kPretrain, kK).report,
                      evaluate(ctx, split, EvalMode::kVariant3, kK).report));
    CHECK(same_values(evaluate(ctx, split, EvalMode::kRecGpt1, kK).report,
                      evaluate(ctx, split, EvalMode::kVariant2, kK).report));
  }
}

TEST_CASE("modes select their checkpoint and recall path") {
  const Fixture f;
  const auto ctx = f.ctx();
  const auto pre = evaluate(ctx, Split::kTest, EvalMode::kPretrain, kK);
  const auto v1 = evaluate(ctx, Split::kTest, EvalMode::kVariant1, kK);
  const auto r1 = evaluate(ctx, Split::kTest, EvalMode::kRecGpt1, kK);
  const auto rg = evaluate(ctx, Split::kTest, EvalMode::kRecGpt, kK);
  const auto ft = evaluate(ctx, Split::kTest, EvalMode::kFinetune, kK);
  for (std::size_t u = 0; u < f.data.num_users(); ++u) {
    const auto uid = static_cast<UserId>(u);
    const auto plain = history_input(f.data, nullptr, uid, Split::kTest);
    const auto prompted = history_input(f.data, &f.cache, uid, Split::kTest);
    CHECK(pre.outcomes[u].recall.items ==
          recall::recall_one_step(f.pre, uid, plain, 10, Scorer::kTiedEmbedding).items);
    CHECK(v1.outcomes[u].recall.items ==
          recall::recall_two_step(f.pre, uid, plain, 10, 9, 1, Scorer::kTiedEmbedding).items);
    CHECK(r1.outcomes[u].recall.items ==
          recall::recall_one_step(f.tuned, uid, prompted, 10, Scorer::kOutputLayer).items);
    CHECK(rg.outcomes[u].recall.items ==
          recall::recall_two_step(f.tuned, uid, prompted, 10, 9, 1, Scorer::kOutputLayer).items);
    CHECK(ft.outcomes[u].recall.items ==
          recall::recall_one_step(f.fine, uid, plain, 10, Scorer::kOutputLayer).items);
    CHECK(pre.outcomes[u].target == f.data.test_target(uid));
  }
}

TEST_CASE("history inputs per split") {
  const Fixture f;
  const auto full = f.data.full_sequence(3);
  const auto valid = history_input(f.data, nullptr, 3, Split::kValid);
  const auto test = history_input(f.data, nullptr, 3, Split::kTest);
  CHECK(valid.size() == full.size() - 2);
  CHECK(test.size() == full.size() - 1);
  CHECK(valid.items.back() == full[full.size() - 3]);
  const auto pv = history_input(f.data, &f.cache, 3, Split::kValid);
  CHECK(pv == f.cache.at(3).prefix_through_real(full.size() - 2));
  const auto pt = history_input(f.data, &f.cache, 3, Split::kTest);
  CHECK(pt == f.cache.at(3).sequence());
}

TEST_CASE("evaluate errors") {
  Fixture f;
  auto ctx = f.ctx();
  ctx.tuned = nullptr;
  CHECK_THROWS_AS(evaluate(ctx, Split::kTest, EvalMode::kRecGpt, kK), DataError);
  ctx = f.ctx();
  ctx.finetuned = nullptr;
  CHECK_THROWS_AS(evaluate(ctx, Split::kTest, EvalMode::kFinetune, kK), DataError);
  ctx = f.ctx();
  ctx.m = 4;
  ctx.n = 2;
  CHECK_THROWS_AS(evaluate(ctx, Split::kTest, EvalMode::kRecGpt, kK), ConfigError);
  CHECK_NOTHROW(evaluate(ctx, Split::kTest, EvalMode::kRecGpt1, kK));
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(evaluate(ctx, Split::kTest, EvalMode::kPretrain, none), ConfigError);
}

TEST_CASE("a model that memorises the shared target scores 1") {
  // Every user ends on item 0; a constant hidden state aligned with item 0 ranks it first.
  std::vector<std::vector<ItemId>> seqs;
  for (int u = 0; u < 6; ++u) seqs.push_back({static_cast<ItemId>(1 + u), static_cast<ItemId>(2 + u), 0});
  const data::SplitDataset data(synth::catalog(6, 10), seqs, 50);
  const auto dims = synth::small_dims(6, 10, 4, 2, 1, 6, 50);
  auto p = ModelParams<float>::zeros(dims);
  for (std::size_t j = 0; j < dims.d; ++j) {
    p.layers[0].b2.value[j] = 1.0f;
    p.item_emb.value(0, j) = 1.0f;
  }
  EvalContext ctx;
  ctx.dataset = &data;
  ctx.pretrained = &p;
  const std::vector<std::size_t> k5{5};
  const auto r = evaluate(ctx, Split::kTest, EvalMode::kPretrain, k5).report;
  CHECK(r.get("HR", 5) == 1.0);
  CHECK(r.get("NDCG", 5) == 1.0);
  CHECK(r.n_users == 6);
}

TEST_CASE("the recall dump reproduces the report") {
  const Fixture f;
  const auto ctx = f.ctx();
  for (auto mode : {EvalMode::kPretrain, EvalMode::kRecGpt}) {
    const auto ev = evaluate(ctx, Split::kTest, mode, kK);
    std::stringstream dump;
    write_recall_dump(dump, f.data, ev.outcomes);

    std::string line;
    std::getline(dump, line);
    CHECK(line == "user_id,rank,item_id,score,provenance");
    std::map<std::string, std::size_t> rank_by_user;
    std::size_t rows = 0;
    while (std::getline(dump, line)) {
      const auto cols = split_csv(line);
      REQUIRE(cols.size() == 5);
      ++rows;
      const auto user = *f.data.catalog().find_user(cols[0]);
      if (cols[2] == f.data.catalog().item_name(f.data.test_target(user)))
        rank_by_user[cols[0]] = std::stoul(cols[1]);
      CHECK((cols[4] == "STEP1" || cols[4] == "STEP2"));
    }
    CHECK(rows == 10 * f.data.num_users());

    for (std::size_t k : kK) {
      double hits = 0.0, ndcg = 0.0;
      for (const auto& [user, rank] : rank_by_user) {
        if (rank <= k) {
          hits += 1.0;
          ndcg += 1.0 / std::log2(rank + 1.0);
        }
      }
      const double n = static_cast<double>(f.data.num_users());
      CHECK(ev.report.get("HR", k) == hits / n);
      CHECK(ev.report.get("NDCG", k) == doctest::Approx(ndcg / n).epsilon(1e-15));
    }
  }
}

TEST_CASE("per-user dump columns") {
  const Fixture f;
  const auto ev = evaluate(f.ctx(), Split::kTest, EvalMode::kRecGpt1, kK);
  std::stringstream out;
  write_user_dump(out, f.data, ev.outcomes, kK);
  std::string line;
  std::getline(out, line);
  CHECK(line == "user_id,target_item,rank,HR@5,NDCG@5,HR@10,NDCG@10");
  std::size_t n = 0;
  while (std::getline(out, line)) {
    const auto cols = split_csv(line);
    REQUIRE(cols.size() == 7);
    const auto rank = std::stoul(cols[2]);
    CHECK(cols[3] == (rank >= 1 && rank <= 5 ? "1" : "0"));
    CHECK(cols[5] == (rank >= 1 && rank <= 10 ? "1" : "0"));
    ++n;
  }
  CHECK(n == f.data.num_users());
}

TEST_CASE("report invariants hold on random models") {
  const auto data = synth::cyclic(30, 15, 8, 9);
  const auto dims = synth::small_dims(30, 15, 4, 2, 1, 6, 50);
  const std::vector<std::size_t> ks{1, 3, 5, 10};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = synth::random_params<float>(dims, seed, 0.7);
    EvalContext ctx;
    ctx.dataset = &data;
    ctx.pretrained = &p;
    const auto r = evaluate(ctx, Split::kTest, EvalMode::kVariant1, ks).report;
    double prev_hr = 0.0;
    for (std::size_t k : ks) {
      const double hr = r.get("HR", k), ndcg = r.get("NDCG", k);
      CHECK(hr >= 0.0);
      CHECK(hr <= 1.0);
      CHECK(ndcg <= hr);
      CHECK(ndcg >= 0.0);
      CHECK(hr >= prev_hr);
      prev_hr = hr;
    }
  }
}

TEST_CASE("evaluation is deterministic and independent of user order") {
  const Fixture f;
  const auto a = evaluate(f.ctx(), Split::kTest, EvalMode::kRecGpt, kK);
  const auto b = evaluate(f.ctx(), Split::kTest, EvalMode::kRecGpt, kK);
  CHECK(a.report == b.report);

  // Reverse the users in both the dataset and the user tables.
  const std::size_t U = f.data.num_users();
  data::Catalog cat;
  std::vector<std::vector<ItemId>> seqs;
  for (std::size_t i = 0; i < U; ++i) cat.add_user(f.data.catalog().user_name(static_cast<UserId>(U - 1 - i)));
  for (const auto& name : f.data.catalog().item_names()) cat.add_item(name);
  for (std::size_t i = 0; i < U; ++i) seqs.push_back(f.data.sequences()[U - 1 - i]);
  const data::SplitDataset reversed(cat, seqs, f.data.max_len());
  auto flip = [&](ModelParams<float> p) {
    const auto src = p.user_emb.value;
    for (std::size_t i = 0; i < U; ++i)
      for (std::size_t j = 0; j < src.cols(); ++j) p.user_emb.value(i, j) = src(U - 1 - i, j);
    return p;
  };
  const auto tuned = flip(f.tuned);
  const auto cache = training::PromptCache::build(tuned, reversed, 2);
  EvalContext ctx;
  ctx.dataset = &reversed;
  ctx.tuned = &tuned;
  ctx.prompts = &cache;
  const auto c = evaluate(ctx, Split::kTest, EvalMode::kRecGpt, kK);
  CHECK(c.report == a.report);
}

TEST_CASE("validator agrees with one-step validation HR@10") {
  const Fixture f;
  const auto validator = make_validator(f.data, Scorer::kOutputLayer, 10);
  const auto r = evaluate(f.ctx(), Split::kValid, EvalMode::kRecGpt1, kK).report;
  CHECK(validator(f.tuned, &f.cache) == r.get("HR", 10));
}

TEST_CASE("sweep grids") {
  const auto g = mn_grid(10);
  const std::vector<std::pair<std::size_t, std::size_t>> expected{
      {10, 0}, {9, 1}, {8, 2}, {7, 3}, {6, 4}, {5, 5}};
  CHECK(g == expected);
  CHECK(window_grid() == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("m_n sweep covers the grid and its (10,0) row is the one-step result") {
  const Fixture f;
  const auto grid = mn_grid(10);
  const auto table = sweep_mn(f.ctx(), Split::kTest, EvalMode::kRecGpt, grid, kK);
  CHECK(table.axis == "m_n");
  REQUIRE(table.points.size() == grid.size());
  CHECK(table.points[0].label == "10_0");
  CHECK(table.points[5].label == "5_5");
  const auto r1 = evaluate(f.ctx(), Split::kTest, EvalMode::kRecGpt1, kK).report;
  CHECK(same_values(table.points[0].report, r1));

  auto ctx = f.ctx();
  ctx.m = 7;
  ctx.n = 3;
  CHECK(same_values(table.points[3].report,
                    evaluate(ctx, Split::kTest, EvalMode::kRecGpt, kK).report));
  CHECK_THROWS_AS(sweep_mn(f.ctx(), Split::kTest, EvalMode::kRecGpt1, grid, kK), ConfigError);
}

TEST_CASE("window sweep retunes once per window") {
  const Fixture f;
  std::vector<std::size_t> asked;
  auto tune = [&](std::size_t K) {
    asked.push_back(K);
    auto p = synth::random_params<float>(f.dims, 100 + K, 0.5);
    auto cache = training::PromptCache::build(p, f.data, K);
    return TunedModel{std::move(p), std::move(cache)};
  };
  const std::vector<std::size_t> grid{0, 1, 3};
  const auto table = sweep_window(f.ctx(), Split::kTest, EvalMode::kRecGpt1, grid, tune, kK);
  CHECK(asked == grid);
  REQUIRE(table.points.size() == 3);
  CHECK(table.axis == "K");
  CHECK(table.points[2].label == "K=3");
  CHECK(table.points[2].window == 3);

  const auto again = tune(3);
  auto ctx = f.ctx();
  ctx.tuned = &again.params;
  ctx.prompts = &again.prompts;
  CHECK(same_values(table.points[2].report,
                    evaluate(ctx, Split::kTest, EvalMode::kRecGpt1, kK).report));

  std::stringstream csv;
  write_sweep_csv(csv, table);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "axis,point,mode,metric,k,value,n_users");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3 * 4);
}

TEST_CASE("metrics CSV and table output") {
  MetricsReport r;
  r.mode = EvalMode::kRecGpt;
  r.n_users = 4;
  const std::vector<std::size_t> ranks{1, 0, 3, 7};
  r.values = aggregate(ranks, kK);
  std::stringstream csv;
  write_metrics_csv(csv, std::span<const MetricsReport>(&r, 1));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "mode,metric,k,value,n_users");
  std::getline(csv, line);
  CHECK(line == "RECGPT,HR,5,0.5,4");
  std::stringstream table;
  write_metrics_table(table, std::span<const MetricsReport>(&r, 1));
  CHECK(table.str().find("RECGPT") != std::string::npos);
  CHECK(table.str().find("0.5000") != std::string::npos);
}
