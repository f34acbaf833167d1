#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "recgpt/data/batching.hpp"
#include "recgpt/data/interactions.hpp"
#include "recgpt/data/splits.hpp"
#include "recgpt/errors.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace recgpt;
using namespace recgpt::data;

namespace {

std::vector<Interaction> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_tsv(in);
}



}  // namespace

TEST_CASE("tsv parsing") {
  const auto one = parse("u1\ti9\t100\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Interaction{"u1", "i9", 100});
  CHECK(parse("").empty());
  CHECK(parse("a\tb\t1\r\n\nc\td\t2\n").size() == 2);

  try {
    parse("u1\ti9\n");
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("u1\ti9\t1\nu2\ti3\tnope\n"), DataError);
  CHECK_THROWS_AS(parse("u1\ti9\t-5\n"), DataError);
  CHECK_THROWS_AS(ingest_tsv("/nonexistent/file.tsv"), IoError);

  TempDir dir("tsv");
  {
    std::ofstream f(dir / "x.tsv");
    f << "u\ti\t3\n";
  }
  CHECK(ingest_tsv(dir / "x.tsv").size() == 1);
}

TEST_CASE("kcore: trivial cases") {
  std::vector<Interaction> dense;
  for (int u = 0; u < 5; ++u)
    for (int i = 0; i < 5; ++i) dense.push_back({"u" + std::to_string(u), "i" + std::to_string(i), i});
  CHECK(kcore_filter(dense, 5) == dense);

  std::vector<Interaction> lonely;
  for (int i = 0; i < 4; ++i) lonely.push_back({"u", "i" + std::to_string(i), i});
  CHECK(kcore_filter(lonely, 5).empty());
  CHECK_THROWS_AS(kcore_filter(lonely, 0), ConfigError);
}

TEST_CASE("kcore: cascade matches the oracle") {
  // k = 2. Item z has users a and b; b has only one other record, on y,
  // which is b's only partner on y. Dropping c (one record) drops item w,
  // which drops a below k, which drops z below k, and so on.
  const auto xs = parse(
      "a\tz\t1\na\tw\t2\nb\tz\t3\nb\ty\t4\nc\tw\t5\nd\ty\t6\nd\tx\t7\ne\tx\t8\ne\tv\t9\n");
  const auto got = kcore_filter(xs, 2);
  CHECK(got == oracle::kcore(xs, 2));
}

TEST_CASE("kcore: random logs match the fixpoint oracle and are fixpoints") {
  numerics::Rng rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    const auto xs = oracle::random_log(rng, 1 + rng.uniform_index(20), 2 + rng.uniform_index(5),
                               2 + rng.uniform_index(5));
    const std::size_t k = 1 + rng.uniform_index(3);
    const auto got = kcore_filter(xs, k);
    CHECK(got == oracle::kcore(xs, k));
    CHECK(kcore_filter(got, k) == got);
  }
}

TEST_CASE("splits: leave-one-out on A,B,C,D,E") {
  const auto xs = parse("u\tA\t1\nu\tB\t2\nu\tC\t3\nu\tD\t4\nu\tE\t5\n");
  const auto ds = build_splits(xs);
  REQUIRE(ds.num_users() == 1);
  auto name = [&](ItemId i) { return ds.catalog().item_name(i); };
  std::vector<std::string> train;
  for (auto i : ds.train_prefix(0)) train.push_back(name(i));
  CHECK(train == std::vector<std::string>{"A", "B", "C"});
  CHECK(name(ds.valid_target(0)) == "D");
  CHECK(name(ds.test_target(0)) == "E");
  CHECK(ds.test_history(0).size() == 4);
}

TEST_CASE("splits: chronological order, short users dropped, min_ts filter") {
  const auto xs = parse(
      "u1\tc\t30\nu1\ta\t10\nu1\tb\t20\nu2\ta\t5\nu2\tb\t6\nu1\td\t20\nu3\tx\t1\nu3\ty\t50\n"
      "u3\tz\t60\nu3\tw\t70\n");
  const auto ds = build_splits(xs);
  CHECK(ds.num_users() == 2);  // u2 has two records
  const auto u1 = *ds.catalog().find_user("u1");
  std::vector<std::string> seq;
  for (auto i : ds.full_sequence(u1)) seq.push_back(ds.catalog().item_name(i));
  // b and d share timestamp 20; input order wins.
  CHECK(seq == std::vector<std::string>{"a", "b", "d", "c"});

  const auto filtered = build_splits(xs, std::int64_t{15});
  const auto f1 = *filtered.catalog().find_user("u1");
  std::vector<std::string> kept;
  for (auto i : filtered.full_sequence(f1)) kept.push_back(filtered.catalog().item_name(i));
  CHECK(kept == std::vector<std::string>{"b", "d", "c"});
  CHECK(filtered.full_sequence(*filtered.catalog().find_user("u3")).size() == 3);
  CHECK(!build_splits(xs, std::int64_t{55}).catalog().find_user("u3").has_value());
}

TEST_CASE("splits: deterministic and stats match a direct count") {
  numerics::Rng rng(4);
  const auto xs = oracle::random_log(rng, 400, 30, 25);
  const auto a = build_splits(xs), b = build_splits(xs);
  CHECK(a == b);
  const auto st = compute_stats(a);
  std::size_t actions = 0;
  for (const auto& s : a.sequences()) actions += s.size();
  CHECK(st.users == a.num_users());
  CHECK(st.items == a.num_items());
  CHECK(st.actions == actions);
  CHECK(st.avg_length == static_cast<double>(actions) / static_cast<double>(a.num_users()));
  CHECK(st.sparsity == 1.0 - static_cast<double>(actions) /
                                 (static_cast<double>(a.num_users()) * a.num_items()));
}

TEST_CASE("negative sampling") {
  numerics::Rng rng(1);
  const std::vector<ItemId> h0{0};
  for (int i = 0; i < 20; ++i) CHECK(sample_negatives(h0, 2, 1, rng) == std::vector<ItemId>{1});
  const std::vector<ItemId> full{0, 1};
  CHECK_THROWS_AS(sample_negatives(full, 2, 1, rng), DataError);

  const std::vector<ItemId> hist{1, 4, 5};
  const std::size_t vocab = 10, draws = 100000;
  std::map<ItemId, double> counts;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto x = sample_negatives(hist, vocab, 1, rng)[0];
    CHECK_FALSE(std::binary_search(hist.begin(), hist.end(), x));
    counts[x] += 1.0;
  }
  CHECK(counts.size() == 7);
  const double expect = static_cast<double>(draws) / 7.0;
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 22.46);  // df = 6, p = 0.001
}

TEST_CASE("truncate_last keeps aligned pairs") {
  TaggedSequence s{{1, 2, 3}, {Segment::kReal, Segment::kPrompt, Segment::kReal}};
  CHECK(truncate_last(s, 50) == s);
  CHECK_THROWS_AS(truncate_last(s, 0), ConfigError);

  numerics::Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    TaggedSequence t;
    const std::size_t n = 1 + rng.uniform_index(80);
    for (std::size_t i = 0; i < n; ++i) {
      t.items.push_back(static_cast<ItemId>(rng.uniform_index(1000)));
      t.segments.push_back(rng.uniform_index(2) ? Segment::kPrompt : Segment::kReal);
    }
    const std::size_t L = 1 + rng.uniform_index(60);
    const auto cut = truncate_last(t, L);
    const std::size_t keep = std::min(n, L);
    REQUIRE(cut.size() == keep);
    for (std::size_t i = 0; i < keep; ++i) {
      CHECK(cut.items[i] == t.items[n - keep + i]);
      CHECK(cut.segments[i] == t.segments[n - keep + i]);
    }
  }
}

TEST_CASE("pretraining batches: windows, targets, padding, negatives") {
  std::vector<std::vector<ItemId>> seqs{{0, 1, 2, 3, 4, 5}, {5, 4, 3}, {2, 3, 4, 5}};
  Catalog cat;
  for (int u = 0; u < 3; ++u) cat.add_user("u" + std::to_string(u));
  for (int i = 0; i < 8; ++i) cat.add_item("i" + std::to_string(i));
  const SplitDataset ds(cat, seqs, 3);
  std::vector<std::vector<ItemId>> hist;
  for (const auto& s : seqs) hist.push_back(sorted_unique(s));
  numerics::Rng rng(5);
  const std::vector<UserId> users{0, 1, 2};
  const auto b = make_pretrain_batch(ds, users, hist, 2, rng);
  // User 1 has a one-item training prefix and contributes no row.
  REQUIRE(b.rows() == 2);
  // User 0: prefix 0..3, window of max_len + 1 = 4 -> input 0,1,2 targets 1,2,3.
  CHECK(std::vector<ItemId>(b.items(0).begin(), b.items(0).end()) == std::vector<ItemId>{0, 1, 2});
  CHECK(std::vector<ItemId>(b.targets(0).begin(), b.targets(0).end()) ==
        std::vector<ItemId>{1, 2, 3});
  CHECK(b.length(1) == 1);
  CHECK(b.width() == 3);
  CHECK(b.target_count() == 4);
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t t = 0; t < b.length(r); ++t)
      for (auto neg : b.negatives(r, t)) {
        const auto& h = hist[static_cast<std::size_t>(b.user(r))];
        CHECK_FALSE(std::binary_search(h.begin(), h.end(), neg));
        CHECK(neg >= 0);
        CHECK(neg < 8);
      }
}

TEST_CASE("epoch batches are a pure function of seed and epoch") {
  CHECK(epoch_batches(50, 8, 1, 3) == epoch_batches(50, 8, 1, 3));
  CHECK(epoch_batches(50, 8, 1, 3) != epoch_batches(50, 8, 1, 4));
  const auto b = epoch_batches(50, 8, 1, 0);
  std::set<UserId> seen;
  for (const auto& batch : b) {
    CHECK(batch.size() <= 8);
    seen.insert(batch.begin(), batch.end());
  }
  CHECK(seen.size() == 50);
}
