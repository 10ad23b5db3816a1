#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgprune/kg_store.hpp"
#include "kgprune/pairs.hpp"

namespace kgprune {

enum class NodeFate { Kept, Pruned, Unexplored };

inline std::string_view to_string(NodeFate f) {
  switch (f) {
    case NodeFate::Kept: return "kept";
    case NodeFate::Pruned: return "pruned";
    case NodeFate::Unexplored: return "unexplored";
  }
  return "?";
}

/// Keep/prune oracle consulted once per newly discovered entity.
using Decider = std::function<Decision(const EntityId& seed, const EntityId& reached, const ExpansionPath& path)>;

struct NodeRecord {
  NodeFate fate;
  std::size_t depth;
  ExpansionPath path;
};

struct ExpansionResult {
  EntityId seed;
  std::map<EntityId, NodeRecord> fates;
  std::vector<EntityId> visit_order;

  const NodeRecord* find(const EntityId& e) const {
    auto it = fates.find(e);
    return it == fates.end() ? nullptr : &it->second;
  }

  std::size_t count(NodeFate f) const {
    std::size_t n = 0;
    for (const auto& [_, r] : fates) n += r.fate == f;
    return n;
  }
};

/// Raised when a decider throws; names the offending pair.
class DeciderError : public Error {
 public:
  DeciderError(const EntityId& seed, const EntityId& entity, const std::string& cause)
      : Error("decider failed for seed " + seed.str() + ", entity " + entity.str() + ": " + cause),
        seed_(seed),
        entity_(entity) {}
  const EntityId& seed() const { return seed_; }
  const EntityId& entity() const { return entity_; }

 private:
  EntityId seed_, entity_;
};

/// Superclass closure of a seed. Level 1 is the seed's P31/P279 targets,
/// deeper levels follow P279 only. Maps entity -> first-discovery depth.
inline std::map<EntityId, std::size_t> expand_upward(const KGStore& store, const EntityId& seed) {
  std::map<EntityId, std::size_t> depth;
  std::set<EntityId> visited{seed};
  EntitySet level = first_level_classes(store, seed, Direction::Upward);
  std::size_t d = 1;
  while (!level.empty()) {
    EntitySet next;
    for (const auto& e : level) {
      if (!visited.insert(e).second) continue;
      depth.emplace(e, d);
    }
    for (const auto& e : level)
      for (const auto& sup : store.superclasses(e))
        if (!visited.count(sup)) next.insert(sup);
    level = std::move(next);
    ++d;
  }
  return depth;
}

/// Pruning-aware downward BFS. Level 1 is first_level_classes(seed, Downward);
/// only Kept nodes contribute their P279 subclasses to the next level. Each
/// level is processed in EntityId order and a node's path comes from the first
/// (smallest) Kept parent that discovered it.
inline ExpansionResult expand_downward(const KGStore& store, const EntityId& seed, const Decider& decider,
                                       std::optional<std::size_t> max_depth = std::nullopt) {
  ExpansionResult result{seed, {}, {}};
  if (max_depth && *max_depth == 0) return result;

  std::set<EntityId> discovered{seed};
  std::map<EntityId, ExpansionPath> level;
  for (const auto& e : first_level_classes(store, seed, Direction::Downward)) {
    discovered.insert(e);
    level.emplace(e, ExpansionPath{{seed, e}});
  }

  for (std::size_t depth = 1; !level.empty(); ++depth) {
    std::map<EntityId, ExpansionPath> next;
    const bool may_descend = !max_depth || depth < *max_depth;
    for (auto& [e, path] : level) {
      Decision d;
      try {
        d = decider(seed, e, path);
      } catch (const DeciderError&) {
        throw;
      } catch (const std::exception& ex) {
        throw DeciderError(seed, e, ex.what());
      }
      result.visit_order.push_back(e);
      const bool kept = d == Decision::Keep;
      if (kept && may_descend) {
        for (const auto& child : store.subclasses(e)) {
          if (!discovered.insert(child).second) continue;
          ExpansionPath p = path;
          p.nodes.push_back(child);
          next.emplace(child, std::move(p));
        }
      }
      result.fates.emplace(e, NodeRecord{kept ? NodeFate::Kept : NodeFate::Pruned, depth, std::move(path)});
    }
    level = std::move(next);
  }
  return result;
}

inline const ExpansionPath& discovery_path(const ExpansionResult& result, const EntityId& e) {
  const auto* r = result.find(e);
  if (!r) throw DataError("entity " + e.str() + " was not visited from seed " + result.seed.str());
  return r->path;
}

/// One `seed TAB entity TAB fate TAB depth TAB path` line per visited node, in visit order.
inline void write_expansion(std::ostream& out, const ExpansionResult& r) {
  for (const auto& e : r.visit_order) {
    const auto& rec = r.fates.at(e);
    out << r.seed << '\t' << e << '\t' << to_string(rec.fate) << '\t' << rec.depth << '\t' << rec.path.joined()
        << '\n';
  }
}

inline ExpansionResult read_expansion(std::istream& in) {
  std::optional<ExpansionResult> r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = util::chomp(line);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split(l, '\t');
    if (f.size() != 5) throw ParseError("expansion record expects 5 fields", lineno);
    EntityId seed(f[0]), e(f[1]);
    if (!r) r = ExpansionResult{seed, {}, {}};
    if (r->seed != seed) throw ParseError("mixed seeds in one expansion file", lineno);
    NodeFate fate;
    if (f[2] == "kept") fate = NodeFate::Kept;
    else if (f[2] == "pruned") fate = NodeFate::Pruned;
    else throw ParseError("bad fate '" + std::string(f[2]) + "'", lineno);
    ExpansionPath p;
    for (auto n : util::split(f[4], ',')) p.nodes.emplace_back(n);
    auto depth = util::parse_u64(f[3], lineno);
    r->visit_order.push_back(e);
    r->fates.emplace(e, NodeRecord{fate, depth, std::move(p)});
  }
  if (!r) throw ParseError("empty expansion file");
  return std::move(*r);
}

}  // namespace kgprune
