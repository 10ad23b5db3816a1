#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgprune/embeddings.hpp"
#include "kgprune/evaluation.hpp"
#include "kgprune/kg_store.hpp"

namespace kgprune {

/// Clustered toy world: seeds sit around cluster centres and every labeled
/// node is offset from its seed along a per-cluster keep or prune direction,
/// so the decision is a function of the seed -> reached offset only.
struct SyntheticOptions {
  std::size_t dim = 16;
  std::size_t clusters = 4;
  std::size_t seeds_per_cluster = 10;
  std::size_t level1 = 4;         // first-level classes per seed
  std::size_t children = 2;       // labeled subclasses under each kept node
  std::size_t max_depth = 3;      // deepest labeled level
  double keep_probability = 0.5;
  double center_scale = 3.0;
  double seed_spread = 0.5;
  double offset = 2.0;
  double noise = 0.2;
  std::uint64_t seed = 7;
};

struct SyntheticWorld {
  std::string triples;     // TAB-separated P31/P279 statements
  std::string embeddings;  // text embedding format
  std::string gold;        // labeled pair file
  KGStore store;
  EmbeddingTable table;
  GoldDataset dataset;
};

inline SyntheticWorld make_synthetic_world(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution keep_draw(o.keep_probability);

  auto random_vec = [&](double scale) {
    Vector v(o.dim);
    for (double& x : v) x = scale * normal(rng);
    return v;
  };
  auto unit = [](Vector v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
  };

  std::ostringstream triples, emb, gold;
  EmbeddingTable table(o.dim);
  std::vector<LabeledPair> pairs;
  auto emit_vec = [&](const std::string& id, const Vector& v) {
    std::vector<float> f(v.begin(), v.end());
    table.insert(EntityId(id), f);
    emb << id;
    char buf[32];
    for (float x : f) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
      emb << buf;
    }
    emb << '\n';
  };
  auto around = [&](const Vector& base, const Vector& dir, double scale) {
    Vector v(o.dim);
    for (std::size_t i = 0; i < o.dim; ++i) v[i] = base[i] + scale * dir[i] + o.noise * normal(rng);
    return v;
  };

  std::size_t next_node = 100000;
  auto fresh = [&] { return "Q" + std::to_string(next_node++); };

  for (std::size_t k = 0; k < o.clusters; ++k) {
    const Vector center = random_vec(o.center_scale);
    const Vector keep_dir = unit(random_vec(1.0));
    Vector prune_dir = random_vec(1.0);
    double dot = 0;
    for (std::size_t i = 0; i < o.dim; ++i) dot += prune_dir[i] * keep_dir[i];
    for (std::size_t i = 0; i < o.dim; ++i) prune_dir[i] -= dot * keep_dir[i];
    prune_dir = unit(prune_dir);

    for (std::size_t s = 0; s < o.seeds_per_cluster; ++s) {
      const std::string seed = "Q" + std::to_string(1000 + k * o.seeds_per_cluster + s);
      Vector sv = center;
      for (double& x : sv) x += o.seed_spread * normal(rng);
      emit_vec(seed, sv);

      struct Pending {
        std::string id;
        std::size_t depth;
      };
      std::vector<Pending> frontier;
      for (std::size_t c = 0; c < o.level1; ++c) {
        const std::string node = fresh();
        // Level 1 mixes an instance-of target, a superclass and subclasses.
        if (c == 0) triples << seed << "\tP31\t" << node << '\n';
        else if (c == 1) triples << seed << "\tP279\t" << node << '\n';
        else triples << node << "\tP279\t" << seed << '\n';
        frontier.push_back({node, 1});
      }
      while (!frontier.empty()) {
        auto [node, depth] = frontier.front();
        frontier.erase(frontier.begin());
        const bool keep = keep_draw(rng);
        emit_vec(node, around(sv, keep ? keep_dir : prune_dir, o.offset));
        pairs.push_back({EntityId(seed), EntityId(node), keep ? Decision::Keep : Decision::Prune, depth, std::nullopt});
        gold << seed << '\t' << node << '\t' << (keep ? "keep" : "prune") << '\t' << depth << '\n';
        if (keep && depth < o.max_depth) {
          for (std::size_t c = 0; c < o.children; ++c) {
            const std::string child = fresh();
            triples << child << "\tP279\t" << node << '\n';
            frontier.push_back({child, depth + 1});
          }
        } else {
          // Unlabeled subclass: reachable only through a wrong keep.
          const std::string child = fresh();
          triples << child << "\tP279\t" << node << '\n';
          emit_vec(child, around(sv, prune_dir, 2.0 * o.offset));
        }
      }
    }
  }

  SyntheticWorld w;
  w.triples = triples.str();
  w.embeddings = emb.str();
  w.gold = gold.str();
  w.store = ingest_triples(w.triples);
  w.table = std::move(table);
  w.dataset = make_gold_dataset("synthetic", std::move(pairs));
  return w;
}

}  // namespace kgprune
