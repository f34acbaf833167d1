#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "recgpt/errors.hpp"
#include "recgpt/recall/recall.hpp"
#include "support/reference.hpp"
#include "support/synthetic.hpp"

using namespace recgpt;
using namespace recgpt::model;
using namespace recgpt::recall;
using numerics::Rng;

namespace {

data::TaggedSequence random_input(Rng& rng, std::size_t len, std::size_t vocab) {
  data::TaggedSequence s;
  s.items = synth::random_items(rng, len, vocab);
  for (std::size_t t = 0; t < len; ++t)
    s.segments.push_back(rng.uniform_index(3) == 0 ? Segment::kPrompt : Segment::kReal);
  s.segments.front() = Segment::kReal;
  return s;
}

std::vector<double> ref_scores(const ModelParams<double>& p, UserId user,
                               const data::TaggedSequence& in, Scorer scorer) {
  const auto w = data::truncate_last(in, p.dims.max_len);
  const auto h = ref::forward(p, user, w.items, w.segments);
  return ref::logits(scorer == Scorer::kTiedEmbedding ? p.item_emb.value : p.out_layer.value,
                     h.back());
}

}  // namespace

TEST_CASE("top_k examples") {
  const std::vector<double> s{0.1, 0.9, 0.5, 0.9, -1.0};
  CHECK(top_k<double>(s, 3) == std::vector<ItemId>{1, 3, 2});
  CHECK(top_k<double>(s, 0).empty());
  const std::vector<ItemId> ex{1, 2};
  CHECK(top_k<double>(s, 2, ex) == std::vector<ItemId>{3, 0});
  CHECK_THROWS_AS(top_k<double>(s, 4, ex), DimensionError);
}

TEST_CASE("top_k agrees with a full sort") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(trial);
    const std::size_t n = 1 + rng.uniform_index(30);
    std::vector<double> s(n);
    // Coarse values so ties are common.
    for (auto& x : s) x = static_cast<double>(rng.uniform_index(6));
    const std::size_t k = rng.uniform_index(n + 1);
    const auto full = ref::ranking(s);
    CHECK(top_k<double>(s, k) == std::vector<ItemId>(full.begin(), full.begin() + k));
  }
}

TEST_CASE("one-step recall matches reference scoring") {
  const auto dims = synth::small_dims(3, 9, 4, 2, 1, 6, 6);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(trial);
    const auto p = synth::random_params<double>(dims, 40 + trial);
    const auto in = random_input(rng, 1 + rng.uniform_index(9), dims.num_items);
    const auto user = static_cast<UserId>(rng.uniform_index(dims.num_users));
    const auto scorer = trial % 2 ? Scorer::kTiedEmbedding : Scorer::kOutputLayer;
    const auto r = recall_one_step(p, user, in, 5, scorer);
    const auto expected = ref::ranking(ref_scores(p, user, in, scorer));
    CHECK(r.items == std::vector<ItemId>(expected.begin(), expected.begin() + 5));
    CHECK(r.size() == 5);
    for (auto prov : r.provenance) CHECK(prov == Provenance::kStep1);
    CHECK(std::is_sorted(r.scores.rbegin(), r.scores.rend()));
  }
}

TEST_CASE("two-step with n = 0 is one-step over 100 random instances") {
  const auto dims = synth::small_dims(3, 12, 4, 2, 1, 6, 8);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial);
    const auto p = synth::random_params<float>(dims, trial);
    const auto in = random_input(rng, 1 + rng.uniform_index(8), dims.num_items);
    const std::size_t m = 1 + rng.uniform_index(10);
    const auto scorer = trial % 2 ? Scorer::kTiedEmbedding : Scorer::kOutputLayer;
    const auto a = recall_two_step(p, 0, in, m, m, 0, scorer);
    const auto b = recall_one_step(p, 0, in, m, scorer);
    CHECK(a.items == b.items);
    CHECK(a.scores == b.scores);
    CHECK(a.provenance == b.provenance);
  }
}

TEST_CASE("two-step recall matches a skip-and-fill oracle") {
  const auto dims = synth::small_dims(2, 10, 4, 2, 1, 6, 6);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(300 + trial);
    const auto p = synth::random_params<double>(dims, trial);
    const auto in = random_input(rng, 1 + rng.uniform_index(7), dims.num_items);
    const std::size_t m = 1 + rng.uniform_index(5);
    const std::size_t n = rng.uniform_index(5);
    const auto r = recall_two_step(p, 1, in, m + n, m, n, Scorer::kOutputLayer);

    const auto first = ref::ranking(ref_scores(p, 1, in, Scorer::kOutputLayer));
    std::vector<ItemId> expected(first.begin(), first.begin() + m);
    auto ext = in;
    ext.items.push_back(first.front());
    ext.segments.push_back(Segment::kPrompt);
    for (ItemId id : ref::ranking(ref_scores(p, 1, ext, Scorer::kOutputLayer))) {
      if (expected.size() == m + n) break;
      if (std::find(expected.begin(), expected.end(), id) == expected.end())
        expected.push_back(id);
    }
    CHECK(r.items == expected);
    const std::set<ItemId> distinct(r.items.begin(), r.items.end());
    CHECK(distinct.size() == m + n);
    for (std::size_t i = 0; i < r.size(); ++i)
      CHECK(r.provenance[i] == (i < m ? Provenance::kStep1 : Provenance::kStep2));
  }
}

TEST_CASE("two-step argument checks") {
  const auto dims = synth::small_dims(1, 5, 4, 2, 1, 6, 6);
  const auto p = synth::random_params<float>(dims, 1);
  const auto in = data::all_real(std::vector<ItemId>{0, 1});
  CHECK_THROWS_AS(recall_two_step(p, 0, in, 3, 0, 3, Scorer::kOutputLayer), ConfigError);
  CHECK_THROWS_AS(recall_two_step(p, 0, in, 4, 2, 1, Scorer::kOutputLayer), ConfigError);
  CHECK_THROWS_AS(recall_two_step(p, 0, in, 6, 3, 3, Scorer::kOutputLayer), DimensionError);
}

TEST_CASE("excluded items never appear") {
  const auto dims = synth::small_dims(1, 10, 4, 2, 1, 6, 6);
  const auto p = synth::random_params<float>(dims, 2);
  const auto in = data::all_real(std::vector<ItemId>{3, 4, 5});
  const std::vector<ItemId> ex{3, 4, 5};
  const auto r = recall_two_step(p, 0, in, 7, 4, 3, Scorer::kTiedEmbedding, ex);
  for (ItemId id : r.items) CHECK_FALSE(std::binary_search(ex.begin(), ex.end(), id));
  CHECK(r.size() == 7);
}

TEST_CASE("recall ranking is invariant under positive rescaling of the scorer") {
  const auto dims = synth::small_dims(2, 11, 4, 2, 1, 6, 6);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(trial);
    auto p = synth::random_params<double>(dims, 90 + trial);
    const auto in = random_input(rng, 1 + rng.uniform_index(5), dims.num_items);
    const auto before = recall_one_step(p, 0, in, 6, Scorer::kOutputLayer);
    for (auto& v : p.out_layer.value.values()) v *= 3.0;
    const auto after = recall_one_step(p, 0, in, 6, Scorer::kOutputLayer);
    CHECK(before.items == after.items);
  }
}

TEST_CASE("interest vectors follow greedy decoding") {
  const auto dims = synth::small_dims(1, 6, 4, 2, 1, 6, 8);
  const auto p = synth::random_params<double>(dims, 12);
  const auto in = data::all_real(std::vector<ItemId>{1, 2});
  const auto vs = interest_vectors(p, 0, in, 3, Scorer::kOutputLayer);
  REQUIRE(vs.size() == 3);

  auto cur = in;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto h = ref::forward(p, 0, cur.items, cur.segments).back();
    for (std::size_t j = 0; j < h.size(); ++j) CHECK(vs[s][j] == doctest::Approx(h[j]).epsilon(1e-12));
    cur.items.push_back(ref::ranking(ref::logits(p.out_layer.value, h)).front());
    cur.segments.push_back(Segment::kPrompt);
  }
  CHECK_THROWS_AS(interest_vectors(p, 0, in, 0, Scorer::kOutputLayer), ConfigError);
}

TEST_CASE("inputs longer than max_len use the most recent window") {
  const auto dims = synth::small_dims(1, 8, 4, 2, 1, 6, 4);
  const auto p = synth::random_params<float>(dims, 5);
  const auto long_in = data::all_real(std::vector<ItemId>{0, 1, 2, 3, 4, 5, 6});
  const auto tail = data::all_real(std::vector<ItemId>{3, 4, 5, 6});
  CHECK(recall_one_step(p, 0, long_in, 5, Scorer::kOutputLayer).items ==
        recall_one_step(p, 0, tail, 5, Scorer::kOutputLayer).items);
}
