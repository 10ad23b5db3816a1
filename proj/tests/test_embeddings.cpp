#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kgprune/embeddings.hpp"
#include "kgprune/kg_store.hpp"
#include "support.hpp"

using namespace kgprune;
using testing_support::Q;

TEST(Embeddings, TextReaderInfersDimension) {
  std::istringstream in("Q1 1.0 0.0\nQ2 0.0 1.0\n");
  auto t = read_embeddings_text(in);
  EXPECT_EQ(t.dim(), 2u);
  EXPECT_EQ(t.size(), 2u);
}

TEST(Embeddings, DimensionMismatchIsRejected) {
  std::istringstream in("Q1 1.0 0.0\nQ2 0.0 1.0 2.0\n");
  EXPECT_THROW(read_embeddings_text(in), ParseError);
}

TEST(Embeddings, NonFiniteValueIsRejected) {
  EmbeddingTable t;
  EXPECT_THROW(t.insert(Q(1), {1.0f, std::nanf("")}), DataError);
}

TEST(Embeddings, BinaryRoundTripIsBitIdentical) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> nd(0, 1);
  EmbeddingTable t(24);
  for (int i = 0; i < 1000; ++i) {
    std::vector<float> v(24);
    for (auto& x : v) x = nd(rng);
    t.insert(Q(i), v);
  }
  std::stringstream buf;
  write_embeddings_binary(buf, t);
  auto r = read_embeddings_binary(buf);
  ASSERT_EQ(r.size(), t.size());
  ASSERT_EQ(r.dim(), t.dim());
  for (int i = 0; i < 1000; ++i) {
    const auto* a = t.find(Q(i));
    const auto* b = r.find(Q(i));
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(std::memcmp(a->data(), b->data(), a->size() * sizeof(float)), 0);
  }
}

TEST(Embeddings, TruncatedBinaryIsRejected) {
  auto t = testing_support::table_of({{"Q1", {1, 2}}, {"Q2", {3, 4}}});
  std::stringstream buf;
  write_embeddings_binary(buf, t);
  std::string s = buf.str();
  std::istringstream cut(s.substr(0, s.size() - 3));
  EXPECT_THROW(read_embeddings_binary(cut), ParseError);
  std::istringstream bad("EMB0xxxx");
  EXPECT_THROW(read_embeddings_binary(bad), ParseError);
}

TEST(Embeddings, TextRoundTripPreservesFloats) {
  auto t = testing_support::table_of({{"Q1", {0.1f, -3.25e-7f}}, {"Q2", {1e30f, 7}}});
  std::stringstream buf;
  write_embeddings_text(buf, t);
  auto r = read_embeddings_text(buf);
  EXPECT_EQ(*r.find(Q(1)), *t.find(Q(1)));
  EXPECT_EQ(*r.find(Q(2)), *t.find(Q(2)));
}

TEST(Embeddings, E2IsCentroidOfInstances) {
  auto store = ingest_triples("Q10\tP31\tQ1\nQ11\tP31\tQ1\n");
  auto t = testing_support::table_of({{"Q1", {9, 9}}, {"Q10", {1, 0}}, {"Q11", {0, 1}}});
  auto v = entity_vector(t, store, Q(1), EmbeddingKind::E2);
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (Vector{0.5, 0.5}));
  EXPECT_EQ(*entity_vector(t, store, Q(1), EmbeddingKind::E1), (Vector{9, 9}));
}

TEST(Embeddings, E2FallsBackToE1WithoutInstances) {
  auto store = ingest_triples("Q2\tP279\tQ1\n");
  auto t = testing_support::table_of({{"Q1", {3, 4}}});
  EXPECT_EQ(*entity_vector(t, store, Q(1), EmbeddingKind::E2), (Vector{3, 4}));
  EXPECT_FALSE(entity_vector(t, store, Q(2), EmbeddingKind::E2));
}

TEST(Embeddings, E2MatchesBruteForceAverage) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cls(1, 10), inst(100, 160);
  std::normal_distribution<float> nd(0, 1);
  std::string text;
  for (int i = 0; i < 150; ++i) text += "Q" + std::to_string(inst(rng)) + "\tP31\tQ" + std::to_string(cls(rng)) + "\n";
  auto store = ingest_triples(text);
  EmbeddingTable t(5);
  for (int e = 1; e <= 160; ++e) {
    if (e % 3 == 0) continue;
    std::vector<float> v(5);
    for (auto& x : v) x = nd(rng);
    t.insert(Q(e), v);
  }
  for (int c = 1; c <= 10; ++c) {
    std::vector<long double> sum(5, 0);
    int n = 0;
    for (int e = 100; e <= 160; ++e) {
      bool is_instance = text.find("Q" + std::to_string(e) + "\tP31\tQ" + std::to_string(c) + "\n") != std::string::npos;
      if (!is_instance || !t.find(Q(e))) continue;
      for (int i = 0; i < 5; ++i) sum[i] += (*t.find(Q(e)))[i];
      ++n;
    }
    auto v = entity_vector(t, store, Q(c), EmbeddingKind::E2);
    if (n == 0) {
      EXPECT_EQ(v.has_value(), t.contains(Q(c)));
      continue;
    }
    ASSERT_TRUE(v);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR((*v)[i], static_cast<double>(sum[i] / n), 1e-12);
  }
}

TEST(Embeddings, ProximityBasics) {
  const Vector a{1, 2, 3}, e1{1, 0}, e2{0, 1}, zero{0, 0};
  EXPECT_EQ(proximity(a, a, ProximityMetric::Cosine), 0.0);
  EXPECT_EQ(proximity(a, a, ProximityMetric::Euclidean), 0.0);
  EXPECT_DOUBLE_EQ(proximity(e1, e2, ProximityMetric::Cosine), 1.0);
  EXPECT_DOUBLE_EQ(proximity(e1, e2, ProximityMetric::Euclidean), std::sqrt(2.0));
  EXPECT_EQ(proximity(zero, e1, ProximityMetric::Cosine), 1.0);
}

TEST(Embeddings, ProximityMissingVectorNamesEntity) {
  auto store = ingest_triples("");
  auto t = testing_support::table_of({{"Q1", {1, 0}}});
  EmbeddingSpace space(t, store);
  try {
    proximity(space, Q(1), Q(42), ProximityMetric::Cosine);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Q42"), std::string::npos);
  }
}

TEST(Embeddings, ProximityMatchesLongDoubleOracle) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd(0, 1);
  for (int k = 0; k < 50; ++k) {
    Vector a(32), b(32);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    long double ab = 0, aa = 0, bb = 0, sq = 0;
    for (int i = 0; i < 32; ++i) {
      ab += static_cast<long double>(a[i]) * b[i];
      aa += static_cast<long double>(a[i]) * a[i];
      bb += static_cast<long double>(b[i]) * b[i];
      sq += (static_cast<long double>(a[i]) - b[i]) * (static_cast<long double>(a[i]) - b[i]);
    }
    const double cos_ref = static_cast<double>(1.0L - ab / sqrtl(aa * bb));
    const double euc_ref = static_cast<double>(sqrtl(sq));
    EXPECT_NEAR(proximity(a, b, ProximityMetric::Cosine), cos_ref, 1e-12 * std::max(1.0, std::abs(cos_ref)));
    EXPECT_NEAR(proximity(a, b, ProximityMetric::Euclidean), euc_ref, 1e-12 * euc_ref);
    EXPECT_EQ(proximity(a, b, ProximityMetric::Cosine), proximity(b, a, ProximityMetric::Cosine));
  }
}

namespace {

struct Pool {
  KGStore store;
  EmbeddingTable table;
  std::vector<LabeledPair> pairs;
};

Pool seeds_on_a_line(const std::vector<double>& angles) {
  Pool p;
  p.table = EmbeddingTable(2);
  p.table.insert(Q(1), {1.0f, 0.0f});
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const long s = 10 + static_cast<long>(i);
    p.table.insert(Q(s), {static_cast<float>(std::cos(angles[i])), static_cast<float>(std::sin(angles[i]))});
    p.pairs.push_back({Q(s), Q(1000 + s), Decision::Keep});
  }
  return p;
}

}  // namespace

TEST(Embeddings, NearestPairsSortPrefix) {
  auto p = seeds_on_a_line({0.3, 0.1, 0.2});
  EmbeddingSpace space(p.table, p.store);
  auto got = nearest_labeled_pairs(space, Q(1), p.pairs, Decision::Keep, 2, ProximityMetric::Cosine);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].seed, Q(11));
  EXPECT_EQ(got[1].seed, Q(12));
}

TEST(Embeddings, NearestPairsShortfall) {
  auto p = seeds_on_a_line({0.1, 0.2, 0.3, 0.4, 0.5});
  EmbeddingSpace space(p.table, p.store);
  EXPECT_EQ(nearest_labeled_pairs(space, Q(1), p.pairs, Decision::Keep, 20, ProximityMetric::Cosine).size(), 5u);
  EXPECT_TRUE(nearest_labeled_pairs(space, Q(1), p.pairs, Decision::Prune, 20, ProximityMetric::Cosine).empty());
  EXPECT_TRUE(nearest_labeled_pairs(space, Q(1), {}, Decision::Keep, 20, ProximityMetric::Cosine).empty());
}

TEST(Embeddings, NearestPairsSameSeedPolicy) {
  auto p = seeds_on_a_line({0.1});
  p.pairs.push_back({Q(1), Q(5000), Decision::Keep});
  EmbeddingSpace space(p.table, p.store);
  auto allow = nearest_labeled_pairs(space, Q(1), p.pairs, Decision::Keep, 5, ProximityMetric::Cosine);
  ASSERT_EQ(allow.size(), 2u);
  EXPECT_EQ(allow[0].seed, Q(1));
  auto excl = nearest_labeled_pairs(space, Q(1), p.pairs, Decision::Keep, 5, ProximityMetric::Cosine,
                                    SameSeedPolicy::Exclude);
  ASSERT_EQ(excl.size(), 1u);
  EXPECT_EQ(excl[0].seed, Q(10));
}

TEST(Embeddings, NearestPairsMatchFullSortOracle) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> seed_pick(0, 39), reached(1, 500), dec(0, 1);
  std::normal_distribution<float> nd(0, 1);
  KGStore store;
  EmbeddingTable t(6);
  for (int s = 0; s <= 40; ++s) {
    std::vector<float> v(6);
    for (auto& x : v) x = std::round(nd(rng) * 2) / 2;  // coarse grid forces distance ties
    t.insert(Q(s), v);
  }
  std::vector<LabeledPair> pool;
  for (int i = 0; i < 200; ++i)
    pool.push_back({Q(seed_pick(rng)), Q(10000 + reached(rng)), dec(rng) ? Decision::Keep : Decision::Prune});
  EmbeddingSpace space(t, store);
  for (auto metric : {ProximityMetric::Cosine, ProximityMetric::Euclidean}) {
    for (std::size_t n : {1u, 7u, 50u, 300u}) {
      std::vector<std::tuple<double, EntityId, EntityId>> all;
      for (const auto& p : pool)
        if (p.decision == Decision::Keep) all.emplace_back(proximity(space, Q(40), p.seed, metric), p.seed, p.reached);
      std::stable_sort(all.begin(), all.end());
      auto got = nearest_labeled_pairs(space, Q(40), pool, Decision::Keep, n, metric);
      ASSERT_EQ(got.size(), std::min(n, all.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].seed, std::get<1>(all[i]));
        EXPECT_EQ(got[i].reached, std::get<2>(all[i]));
      }
    }
  }
}
