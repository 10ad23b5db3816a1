#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kgprune/entity_id.hpp"
#include "kgprune/util.hpp"

namespace kgprune {

/// Keep (k) or prune (p).
enum class Decision { Keep, Prune };

inline std::string_view to_string(Decision d) { return d == Decision::Keep ? "keep" : "prune"; }

inline Decision parse_decision(std::string_view s, std::size_t line = 0) {
  s = util::trim(s);
  if (s == "keep" || s == "k" || s == "K") return Decision::Keep;
  if (s == "prune" || s == "p" || s == "P") return Decision::Prune;
  throw ParseError("decision must be keep|prune, got '" + std::string(s) + "'", line);
}

inline Decision opposite(Decision d) { return d == Decision::Keep ? Decision::Prune : Decision::Keep; }

/// Node sequence from a seed (inclusive) to a reached entity (inclusive).
struct ExpansionPath {
  std::vector<EntityId> nodes;

  std::size_t depth() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  const EntityId& seed() const { return nodes.front(); }
  const EntityId& reached() const { return nodes.back(); }

  std::string joined(char sep = ',') const {
    std::string out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i) out += sep;
      out += nodes[i].str();
    }
    return out;
  }

  friend bool operator==(const ExpansionPath&, const ExpansionPath&) = default;
};

/// An entity reached from a seed, with the path that reached it when known.
struct QueryPair {
  EntityId seed;
  EntityId reached;
  std::optional<ExpansionPath> path;
};

/// Supervision unit: a (seed, reached) pair with its gold decision.
struct LabeledPair {
  LabeledPair(EntityId s, EntityId r, Decision d, std::size_t depth_ = 1, std::optional<ExpansionPath> path_ = {})
      : seed(std::move(s)), reached(std::move(r)), decision(d), depth(depth_), path(std::move(path_)) {}

  EntityId seed;
  EntityId reached;
  Decision decision;
  std::size_t depth = 1;
  std::optional<ExpansionPath> path;

  QueryPair query() const { return {seed, reached, path}; }
};

/// Reads `seed TAB reached TAB decision TAB depth` lines. The depth column may
/// be omitted (defaults to 1).
inline std::vector<LabeledPair> read_labeled_pairs(std::istream& in) {
  std::vector<LabeledPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = util::chomp(line);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split(l, '\t');
    if (f.size() != 3 && f.size() != 4)
      throw ParseError("labeled pair expects seed, reached, decision[, depth]", lineno);
    EntityId seed(util::trim(f[0])), reached(util::trim(f[1]));
    if (seed == reached) throw ParseError("seed equals reached entity " + seed.str(), lineno);
    LabeledPair p{seed, reached, parse_decision(f[2], lineno), 1, std::nullopt};
    if (f.size() == 4) {
      p.depth = util::parse_u64(f[3], lineno);
      if (p.depth == 0) throw ParseError("depth must be >= 1", lineno);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<LabeledPair> read_labeled_pairs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_labeled_pairs(in);
}

inline void write_labeled_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs) {
  for (const auto& p : pairs)
    out << p.seed << '\t' << p.reached << '\t' << to_string(p.decision) << '\t' << p.depth << '\n';
}

}  // namespace kgprune
