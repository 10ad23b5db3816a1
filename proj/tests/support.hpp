#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "kgprune/entity_id.hpp"
#include "kgprune/embeddings.hpp"
#include "kgprune/expansion.hpp"
#include "kgprune/kg_store.hpp"

namespace testing_support {

inline kgprune::EntityId Q(long n) { return kgprune::EntityId("Q" + std::to_string(n)); }

struct Triple {
  std::string s, p, o;
};

inline std::string to_text(const std::vector<Triple>& ts) {
  std::string out;
  for (const auto& t : ts) out += t.s + '\t' + t.p + '\t' + t.o + '\n';
  return out;
}

/// Random subclass graph over Q1..Qn below seed Q0. Edges point child -> parent
/// (P279) with parent index < child index, so the graph is acyclic unless
/// `cycles` adds back edges. The seed links to a few roots via P31/P279/reverse.
inline std::vector<Triple> random_hierarchy(std::mt19937_64& rng, int n, bool cycles) {
  std::vector<Triple> ts;
  std::uniform_int_distribution<int> kind(0, 2);
  const int roots = std::max(1, n / 10);
  for (int r = 1; r <= roots; ++r) {
    switch (kind(rng)) {
      case 0: ts.push_back({"Q0", "P31", "Q" + std::to_string(r)}); break;
      case 1: ts.push_back({"Q0", "P279", "Q" + std::to_string(r)}); break;
      default: ts.push_back({"Q" + std::to_string(r), "P279", "Q0"}); break;
    }
  }
  for (int c = roots + 1; c <= n; ++c) {
    std::uniform_int_distribution<int> parent(1, c - 1);
    std::uniform_int_distribution<int> parents(1, 3);
    for (int k = parents(rng); k > 0; --k) ts.push_back({"Q" + std::to_string(c), "P279", "Q" + std::to_string(parent(rng))});
  }
  if (cycles) {
    std::uniform_int_distribution<int> node(1, n);
    for (int k = 0; k < std::max(1, n / 20); ++k) {
      int a = node(rng), b = node(rng);
      ts.push_back({"Q" + std::to_string(std::min(a, b)), "P279", "Q" + std::to_string(std::max(a, b))});
    }
  }
  return ts;
}

inline kgprune::EmbeddingTable table_of(const std::map<std::string, std::vector<float>>& m) {
  kgprune::EmbeddingTable t;
  for (const auto& [k, v] : m) t.insert(kgprune::EntityId(k), v);
  return t;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kgprune_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Keeps about two thirds of entities, chosen by hashing the id.
inline kgprune::Decision hash_decision(const kgprune::EntityId& e) {
  return kgprune::util::fnv1a(e.str()) % 3 == 0 ? kgprune::Decision::Prune : kgprune::Decision::Keep;
}

struct OracleNode {
  std::size_t depth;
  kgprune::EntityId parent;  // the seed for level-1 nodes
};

/// Recursive relaxation: a node's depth is its shortest distance from the seed
/// through Kept nodes; its parent is the smallest Kept node one level above.
/// Valid for deciders that ignore the path.
inline std::map<kgprune::EntityId, OracleNode> downward_oracle(const std::vector<Triple>& triples,
                                                                const kgprune::EntityId& seed,
                                                                std::optional<std::size_t> max_depth = {}) {
  using kgprune::EntityId;
  std::map<EntityId, std::set<EntityId>> children, level1;
  for (const auto& t : triples) {
    EntityId s(t.s), o(t.o);
    if (t.p == "P279") children[o].insert(s);
    if (s == seed && (t.p == "P279" || t.p == "P31")) level1[seed].insert(o);
    if (o == seed && t.p == "P279") level1[seed].insert(s);
  }
  std::map<EntityId, std::size_t> best;
  std::function<void(const EntityId&, std::size_t)> visit = [&](const EntityId& e, std::size_t d) {
    if (e == seed) return;
    if (max_depth && d > *max_depth) return;
    auto it = best.find(e);
    if (it != best.end() && it->second <= d) return;
    best[e] = d;
    if (hash_decision(e) == kgprune::Decision::Keep)
      for (const auto& c : children[e]) visit(c, d + 1);
  };
  for (const auto& e : level1[seed]) visit(e, 1);

  std::map<EntityId, OracleNode> out;
  for (const auto& [e, d] : best) {
    if (d == 1) {
      out.emplace(e, OracleNode{1, seed});
      continue;
    }
    std::optional<EntityId> parent;
    for (const auto& t : triples) {
      if (t.p != "P279" || EntityId(t.s) != e) continue;
      EntityId p(t.o);
      auto pb = best.find(p);
      if (pb == best.end() || pb->second != d - 1 || hash_decision(p) != kgprune::Decision::Keep) continue;
      if (!parent || p < *parent) parent = p;
    }
    out.emplace(e, OracleNode{d, *parent});
  }
  return out;
}

}  // namespace testing_support
