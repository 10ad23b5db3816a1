#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgprune/embeddings.hpp"
#include "kgprune/matrix.hpp"
#include "kgprune/pairs.hpp"

namespace kgprune {

/// Which decision combinations count as valid / invalid analogies.
///   C1: k::k valid, k::p invalid
///   C2: k::k valid, k::p and p::p invalid
///   C3: k::k and p::p valid, k::p and p::k invalid
enum class AnalogyConfiguration { C1, C2, C3 };

enum class Validity { Valid, Invalid, Excluded };

inline std::string_view to_string(AnalogyConfiguration c) {
  switch (c) {
    case AnalogyConfiguration::C1: return "C1";
    case AnalogyConfiguration::C2: return "C2";
    case AnalogyConfiguration::C3: return "C3";
  }
  return "?";
}

inline std::string_view to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "valid";
    case Validity::Invalid: return "invalid";
    case Validity::Excluded: return "excluded";
  }
  return "?";
}

inline Validity quadruple_validity(AnalogyConfiguration cfg, Decision left, Decision right) {
  using enum Decision;
  const bool same = left == right;
  switch (cfg) {
    case AnalogyConfiguration::C1:
      if (left == Prune) return Validity::Excluded;
      return same ? Validity::Valid : Validity::Invalid;
    case AnalogyConfiguration::C2:
      if (left == Prune && right == Keep) return Validity::Excluded;
      return left == Keep && right == Keep ? Validity::Valid : Validity::Invalid;
    case AnalogyConfiguration::C3:
      return same ? Validity::Valid : Validity::Invalid;
  }
  return Validity::Excluded;
}

/// left : right analogy. `validity` is set for training quadruples only.
struct AnalogyQuadruple {
  LabeledPair left;
  QueryPair right;
  std::optional<Validity> validity;
};

/// For each anchor and each non-excluded (anchor decision, right decision)
/// form, pairs the anchor (left) with up to `m` nearest other labeled pairs
/// (right) carrying the required decision.
inline std::vector<AnalogyQuadruple> build_training_set(AnalogyConfiguration cfg, std::span<const LabeledPair> pairs,
                                                        std::size_t m, const EmbeddingSpace& space,
                                                        ProximityMetric metric) {
  if (m == 0) throw ConfigError("M must be >= 1");
  std::vector<AnalogyQuadruple> out;
  for (const auto& anchor : pairs) {
    for (Decision right : {Decision::Keep, Decision::Prune}) {
      Validity v = quadruple_validity(cfg, anchor.decision, right);
      if (v == Validity::Excluded) continue;
      // One extra candidate so the anchor can be dropped from the ranking.
      auto nearest = nearest_labeled_pairs(space, anchor.seed, pairs, right, m + 1, metric);
      std::size_t taken = 0;
      for (auto& other : nearest) {
        if (taken == m) break;
        if (other.seed == anchor.seed && other.reached == anchor.reached) continue;
        out.push_back({anchor, other.query(), v});
        ++taken;
      }
    }
  }
  return out;
}

enum class PathMode { NoPath, Path };
enum class Padding { Before, Between, After };

inline std::string_view to_string(Padding p) {
  switch (p) {
    case Padding::Before: return "before";
    case Padding::Between: return "between";
    case Padding::After: return "after";
  }
  return "?";
}

/// Shape of the model input: d rows, 2 * side_length columns.
struct InputLayout {
  PathMode path_mode = PathMode::NoPath;
  std::size_t side_length = 2;
  Padding padding = Padding::Between;
  std::size_t dim = 0;

  void validate() const {
    if (side_length < 2) throw ConfigError("side length must be >= 2");
    if (path_mode == PathMode::NoPath && side_length != 2) throw ConfigError("no-path layout requires side length 2");
    if (dim == 0 || dim % 2 != 0) throw ConfigError("embedding dimension must be even and positive");
  }
};

/// Entities laid out on one side: [seed, reached] without paths, else the path
/// nodes truncated to the seed plus the last L-1 entries.
inline std::vector<EntityId> side_sequence(const EntityId& seed, const EntityId& reached,
                                           const std::optional<ExpansionPath>& path, const InputLayout& layout) {
  if (layout.path_mode == PathMode::NoPath || !path || path->nodes.size() < 2) return {seed, reached};
  const auto& nodes = path->nodes;
  if (nodes.front() != seed || nodes.back() != reached)
    throw DataError("path for (" + seed.str() + ", " + reached.str() + ") does not span the pair");
  std::vector<EntityId> seq{seed};
  const std::size_t keep = std::min(layout.side_length - 1, nodes.size() - 1);
  seq.insert(seq.end(), nodes.end() - static_cast<std::ptrdiff_t>(keep), nodes.end());
  return seq;
}

/// Column index within a side for each sequence element, given the padding.
inline std::vector<std::size_t> side_columns(std::size_t seq_len, const InputLayout& layout) {
  const std::size_t pad = layout.side_length - seq_len;
  std::vector<std::size_t> cols(seq_len);
  for (std::size_t k = 0; k < seq_len; ++k) {
    switch (layout.padding) {
      case Padding::Before: cols[k] = pad + k; break;
      case Padding::Between: cols[k] = k == 0 ? 0 : pad + k; break;
      case Padding::After: cols[k] = k; break;
    }
  }
  return cols;
}

inline Matrix assemble_input(const AnalogyQuadruple& q, const InputLayout& layout, const EmbeddingSpace& space) {
  layout.validate();
  if (space.dim() != layout.dim)
    throw DataError("embedding dim " + std::to_string(space.dim()) + " does not match layout dim " +
                    std::to_string(layout.dim));
  Matrix m(layout.dim, 2 * layout.side_length);
  auto fill = [&](const std::vector<EntityId>& seq, std::size_t offset) {
    auto cols = side_columns(seq.size(), layout);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      Vector v = space.at(seq[k]);
      for (std::size_t i = 0; i < layout.dim; ++i) m(i, offset + cols[k]) = v[i];
    }
  };
  fill(side_sequence(q.left.seed, q.left.reached, q.left.path, layout), 0);
  fill(side_sequence(q.right.seed, q.right.reached, q.right.path, layout), layout.side_length);
  return m;
}

/// Known pairs on the left, the unknown pair on the right: the N nearest keep
/// pairs, then (except under C1) the N nearest prune pairs.
inline std::vector<std::pair<AnalogyQuadruple, Decision>> build_inference_quadruples(
    const QueryPair& unknown, std::span<const LabeledPair> labeled, AnalogyConfiguration cfg, std::size_t n,
    const EmbeddingSpace& space, ProximityMetric metric) {
  if (n == 0) throw ConfigError("N must be >= 1");
  std::vector<std::pair<AnalogyQuadruple, Decision>> out;
  auto keeps = nearest_labeled_pairs(space, unknown.seed, labeled, Decision::Keep, n, metric);
  if (keeps.empty()) throw DataError("no labeled keep pairs available to vote for " + unknown.reached.str());
  for (auto& p : keeps) out.push_back({{std::move(p), unknown, std::nullopt}, Decision::Keep});
  if (cfg != AnalogyConfiguration::C1) {
    for (auto& p : nearest_labeled_pairs(space, unknown.seed, labeled, Decision::Prune, n, metric))
      out.push_back({{std::move(p), unknown, std::nullopt}, Decision::Prune});
  }
  return out;
}

struct Vote {
  double score;
  Decision left;
};

struct VoteOutcome {
  Decision decision;
  double keep_score;
};

/// Averages keep votes. Under C3 a prune-left score votes for pruning, so
/// 1 - score is its keep vote. Keep iff the mean is strictly above threshold.
inline VoteOutcome aggregate_votes(AnalogyConfiguration cfg, std::span<const Vote> votes, double threshold) {
  if (votes.empty()) throw DataError("cannot aggregate an empty vote list");
  double sum = 0;
  for (const auto& v : votes)
    sum += (cfg == AnalogyConfiguration::C3 && v.left == Decision::Prune) ? 1.0 - v.score : v.score;
  const double keep = sum / static_cast<double>(votes.size());
  return {keep > threshold ? Decision::Keep : Decision::Prune, keep};
}

}  // namespace kgprune
