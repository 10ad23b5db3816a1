#include <gtest/gtest.h>

#include <random>
#include <set>

#include "kgprune/deciders.hpp"
#include "kgprune/evaluation.hpp"
#include "support.hpp"

using namespace kgprune;
using testing_support::Q;
using enum Decision;

namespace {

ConfusionBreakdown breakdown(std::size_t kk, std::size_t kp, std::size_t pk, std::size_t pp, std::size_t uk,
                             std::size_t up) {
  ConfusionBreakdown cb;
  cb.kept_gold_keep = kk;
  cb.kept_gold_prune = kp;
  cb.pruned_gold_keep = pk;
  cb.pruned_gold_prune = pp;
  cb.unexplored_gold_keep = uk;
  cb.unexplored_gold_prune = up;
  return cb;
}

ExpansionResult result_with(const EntityId& seed, std::initializer_list<std::pair<long, NodeFate>> nodes) {
  ExpansionResult r{seed, {}, {}};
  for (const auto& [id, fate] : nodes) {
    r.fates.emplace(Q(id), NodeRecord{fate, 1, ExpansionPath{{seed, Q(id)}}});
    r.visit_order.push_back(Q(id));
  }
  return r;
}

}  // namespace

TEST(Metrics, WorkedFixture) {
  auto m = compute_metrics(breakdown(2, 1, 1, 1, 1, 1));
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(m.f1, 4.0 / 7.0);
}

TEST(Metrics, AllPruneCorrect) {
  auto m = compute_metrics(breakdown(0, 0, 0, 5, 0, 0));
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1, 0.0);
  auto empty = compute_metrics({});
  EXPECT_EQ(empty.accuracy, 0.0);
}

TEST(Metrics, MatchDuplicateFormulas) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> n(0, 12);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t kk = n(rng), kp = n(rng), pk = n(rng), pp = n(rng), uk = n(rng), up = n(rng);
    auto m = compute_metrics(breakdown(kk, kp, pk, pp, uk, up));
    const double P = (kk + kp) == 0 ? 0.0 : double(kk) / double(kk + kp);
    const double R = (kk + uk + pk) == 0 ? 0.0 : double(kk) / double(kk + uk + pk);
    const std::size_t all = kk + kp + pk + pp + uk + up;
    const double A = all == 0 ? 0.0 : double(kk + pp) / double(all);
    const double F = (P + R) == 0 ? 0.0 : 2 * (P * R) / (P + R);
    EXPECT_EQ(m.precision, P);
    EXPECT_EQ(m.recall, R);
    EXPECT_EQ(m.accuracy, A);
    EXPECT_EQ(m.f1, F);
    EXPECT_LE(m.accuracy, 1.0);
  }
}

TEST(ScoreRun, AllKeptAllKeep) {
  auto r = result_with(Q(0), {{1, NodeFate::Kept}, {2, NodeFate::Kept}, {3, NodeFate::Kept}});
  std::vector<LabeledPair> gold{{Q(0), Q(1), Keep}, {Q(0), Q(2), Keep}, {Q(0), Q(3), Keep}};
  EXPECT_EQ(score_run(r, gold), breakdown(3, 0, 0, 0, 0, 0));
}

TEST(ScoreRun, NeverVisitedIsUnexplored) {
  auto r = result_with(Q(0), {{1, NodeFate::Pruned}});
  std::vector<LabeledPair> gold{{Q(0), Q(1), Prune}, {Q(0), Q(2), Keep}, {Q(0), Q(3), Prune}};
  EXPECT_EQ(score_run(r, gold), breakdown(0, 0, 0, 1, 1, 1));
}

TEST(ScoreRun, MatchesPerNodeOracleAndPartitions) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> f(0, 2), g(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    ExpansionResult r{Q(0), {}, {}};
    std::vector<LabeledPair> gold;
    std::size_t counts[3][2] = {};
    for (long e = 1; e <= 40; ++e) {
      const int fate = f(rng);
      if (fate != 2) r.fates.emplace(Q(e), NodeRecord{fate == 0 ? NodeFate::Kept : NodeFate::Pruned, 1, {}});
      if (e % 4 == 0) continue;  // visited but unlabeled, or neither
      const int dec = g(rng);
      gold.push_back({Q(0), Q(e), dec ? Keep : Prune});
      ++counts[fate][dec ? 0 : 1];
    }
    auto cb = score_run(r, gold);
    EXPECT_EQ(cb, breakdown(counts[0][0], counts[0][1], counts[1][0], counts[1][1], counts[2][0], counts[2][1]));
    EXPECT_EQ(cb.total(), gold.size());
  }
}

TEST(ScoreRun, UnlabeledVisitedNodesChangeNothing) {
  auto r = result_with(Q(0), {{1, NodeFate::Kept}, {2, NodeFate::Pruned}});
  std::vector<LabeledPair> gold{{Q(0), Q(1), Keep}, {Q(0), Q(2), Keep}, {Q(0), Q(3), Prune}};
  auto before = score_run(r, gold);
  r.fates.emplace(Q(50), NodeRecord{NodeFate::Kept, 2, {}});
  r.fates.emplace(Q(51), NodeRecord{NodeFate::Pruned, 2, {}});
  EXPECT_EQ(score_run(r, gold), before);
}

TEST(Summarize, SampleStandardDeviation) {
  std::vector<MetricsReport> runs{{0.5, 0.5, 0.5, 0.5}, {1.0, 1.0, 1.0, 1.0}};
  auto s = summarize(runs);
  EXPECT_DOUBLE_EQ(s.mean.f1, 0.75);
  EXPECT_DOUBLE_EQ(s.std.f1, std::sqrt(0.125));
}

TEST(Folds, TenSeedsGiveFoldsOfTwo) {
  std::vector<EntityId> seeds;
  for (long i = 1; i <= 10; ++i) seeds.push_back(Q(i));
  auto folds = split_folds(seeds, 5, 42);
  std::multiset<EntityId> all;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 2u);
    all.insert(f.begin(), f.end());
  }
  EXPECT_EQ(all, std::multiset<EntityId>(seeds.begin(), seeds.end()));
  EXPECT_EQ(split_folds(seeds, 5, 42), folds);
  EXPECT_THROW(split_folds({Q(1), Q(2)}, 5, 1), DataError);
}

TEST(Folds, NearEqualSizesAndOrderIndependence) {
  std::vector<EntityId> seeds;
  for (long i = 1; i <= 23; ++i) seeds.push_back(Q(i));
  auto folds = split_folds(seeds, 5, 7);
  std::reverse(seeds.begin(), seeds.end());
  EXPECT_EQ(split_folds(seeds, 5, 7), folds);
  std::size_t lo = 100, hi = 0;
  for (const auto& f : folds) lo = std::min(lo, f.size()), hi = std::max(hi, f.size());
  EXPECT_LE(hi - lo, 1u);
}

namespace {

/// Ten seeds Q1..Q10, each with two first-level subclasses and one grandchild.
struct Fixture {
  KGStore store;
  GoldDataset ds;
  Fixture() {
    std::string text;
    std::vector<LabeledPair> pairs;
    for (long s = 1; s <= 10; ++s) {
      const long a = 100 * s, b = 100 * s + 1, c = 100 * s + 2;
      text += "Q" + std::to_string(a) + "\tP279\tQ" + std::to_string(s) + "\n";
      text += "Q" + std::to_string(b) + "\tP279\tQ" + std::to_string(s) + "\n";
      text += "Q" + std::to_string(c) + "\tP279\tQ" + std::to_string(a) + "\n";
      pairs.push_back({Q(s), Q(a), Keep, 1});
      pairs.push_back({Q(s), Q(b), Prune, 1});
      pairs.push_back({Q(s), Q(c), Keep, 2});
    }
    store = ingest_triples(text);
    ds = make_gold_dataset("fixture", pairs);
  }
};

DeciderFactory fixed_factory(Decider d) {
  return [d](const FoldData&) { return d; };
}

}  // namespace

TEST(CrossValidate, FoldProtocol) {
  Fixture f;
  std::vector<FoldData> seen;
  DeciderFactory factory = [&](const FoldData& fd) {
    seen.push_back(fd);
    return keep_all_decider();
  };
  auto rep = cross_validate(f.ds, f.store, factory, 3);
  ASSERT_EQ(rep.folds.size(), 5u);
  ASSERT_EQ(seen.size(), 5u);
  std::multiset<EntityId> tested;
  for (std::size_t i = 0; i < 5; ++i) {
    auto seeds = [](const std::vector<LabeledPair>& ps) {
      std::set<EntityId> s;
      for (const auto& p : ps) s.insert(p.seed);
      return s;
    };
    auto tr = seeds(seen[i].train), va = seeds(seen[i].validation), te = seeds(seen[i].test);
    EXPECT_EQ(te.size(), 2u);
    EXPECT_EQ(va.size(), 2u);
    EXPECT_EQ(tr.size(), 6u);
    for (const auto& s : te) {
      EXPECT_FALSE(tr.count(s));
      EXPECT_FALSE(va.count(s));
      tested.insert(s);
    }
    for (const auto& s : va) EXPECT_FALSE(tr.count(s));
    // Validation of fold i is the test set of fold i-1.
    EXPECT_EQ(va, seeds(seen[(i + 4) % 5].test));
  }
  EXPECT_EQ(tested.size(), 10u);
  EXPECT_EQ(std::set<EntityId>(tested.begin(), tested.end()).size(), 10u);
  // Keep-all: every gold node kept; precision 2/3, recall 1.
  EXPECT_DOUBLE_EQ(rep.aggregate.mean.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(rep.aggregate.mean.recall, 1.0);
  EXPECT_NE(cv_records(rep, "keep_all").find("mean\tkeep_all\t0.666667\t1.000000"), std::string::npos);
}

TEST(CrossValidate, ReportRowsAndPerfectDecider) {
  Fixture f;
  Decider oracle = [](const EntityId&, const EntityId& e, const ExpansionPath&) {
    return e.str().back() == '1' ? Prune : Keep;
  };
  auto rep = cross_validate(f.ds, f.store, fixed_factory(oracle), 9);
  for (const auto& fold : rep.folds) {
    EXPECT_EQ(fold.run.metrics.precision, 1.0);
    EXPECT_EQ(fold.run.metrics.recall, 1.0);
    EXPECT_EQ(fold.run.metrics.f1, 1.0);
    EXPECT_EQ(fold.run.metrics.accuracy, 1.0);
  }
  auto rows = cv_records(rep, "oracle");
  std::size_t data_rows = 0, mean_rows = 0;
  for (auto line : util::split(rows, '\n')) {
    if (line.empty() || line[0] == '#') continue;
    ++data_rows;
    mean_rows += line.substr(0, 5) == "mean\t";
  }
  EXPECT_EQ(data_rows, 6u);
  EXPECT_EQ(mean_rows, 1u);
}

TEST(CrossValidate, DepthDeciderAtMaxDepthHasFullRecall) {
  Fixture f;
  auto rep = cross_validate(f.ds, f.store, fixed_factory(depth_decider(20)), 1);
  EXPECT_EQ(rep.aggregate.mean.recall, 1.0);
  EXPECT_EQ(rep.aggregate.std.recall, 0.0);
}

TEST(SeenUnseen, Rates) {
  Fixture f;
  EvalOptions opt;
  opt.seen_unseen = true;
  auto test = f.ds.pairs_for({Q(1), Q(2)});
  auto disjoint = f.ds.pairs_for({Q(3), Q(4)});
  auto r0 = evaluate_decider(f.store, keep_all_decider(), test, opt, disjoint);
  ASSERT_TRUE(r0.seen_unseen);
  EXPECT_EQ(r0.seen_unseen->seen_rate, 0.0);
  auto r1 = evaluate_decider(f.store, keep_all_decider(), test, opt, test);
  EXPECT_EQ(r1.seen_unseen->seen_rate, 100.0);
  EXPECT_EQ(r1.seen_unseen->seen_counts, r1.counts);
}

TEST(Transfer, UsesEveryTestSeedAndRefusesSameName) {
  Fixture f;
  GoldDataset train{"d1", f.ds.pairs_for({Q(1), Q(2), Q(3), Q(4), Q(5)})};
  GoldDataset test{"d2", f.ds.pairs_for({Q(6), Q(7), Q(8), Q(9), Q(10)})};
  std::size_t train_n = 0, val_n = 0;
  DeciderFactory factory = [&](const FoldData& fd) {
    train_n = fd.train.size();
    val_n = fd.validation.size();
    for (const auto& p : fd.train) EXPECT_LE(p.seed, Q(5));
    return keep_all_decider();
  };
  auto rep = transfer_run(train, test, f.store, factory, 4);
  EXPECT_EQ(rep.results.size(), 5u);
  EXPECT_EQ(rep.counts.total(), test.pairs.size());
  EXPECT_EQ(val_n, 3u);
  EXPECT_EQ(train_n, 12u);
  auto again = transfer_run(train, test, f.store, factory, 4);
  EXPECT_EQ(again.counts, rep.counts);
  GoldDataset same{"d1", test.pairs};
  EXPECT_THROW(transfer_run(train, same, f.store, factory, 4), ConfigError);
}

TEST(GoldDataset, ConflictsAreRejected) {
  EXPECT_THROW(make_gold_dataset("x", {{Q(1), Q(2), Keep}, {Q(1), Q(2), Prune}}), DataError);
  EXPECT_EQ(make_gold_dataset("x", {{Q(1), Q(2), Keep}, {Q(1), Q(2), Keep}}).pairs.size(), 1u);
}
