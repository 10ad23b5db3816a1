#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "kgprune/analogy.hpp"
#include "kgprune/convnet.hpp"
#include "kgprune/expansion.hpp"
#include "kgprune/mlp.hpp"

namespace kgprune {

enum class MissingPolicy { PruneOnMissing, Error };

struct InferenceConfig {
  std::size_t n = 20;           // nearest labeled pairs per decision class
  double threshold = 0.5;       // keep iff mean keep vote is above this
  AnalogyConfiguration configuration = AnalogyConfiguration::C1;
  InputLayout layout{};
  ProximityMetric metric = ProximityMetric::Cosine;
  std::size_t m = 10;           // training analogies per form
  std::size_t mc_samples = 10;  // MC dropout passes when dropout > 0
  MissingPolicy missing = MissingPolicy::PruneOnMissing;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0) throw ConfigError("N must be >= 1");
    if (m == 0) throw ConfigError("M must be >= 1");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
    layout.validate();
  }
};

/// Scores one assembled quadruple; `rng` drives MC dropout.
using QuadrupleScorer = std::function<double(const Matrix&, std::mt19937_64& rng)>;

inline QuadrupleScorer model_scorer(std::shared_ptr<const ModelParams> model, std::size_t mc_samples) {
  return [model = std::move(model), mc_samples](const Matrix& x, std::mt19937_64& rng) {
    return predict(*model, x, mc_samples, rng);
  };
}

struct AnalogyVerdict {
  VoteOutcome outcome;
  std::vector<Vote> votes;
};

/// Inference over labeled analogies: nearest known pairs on the left, the
/// query on the right, one model vote per quadruple.
class AnalogyScorer {
 public:
  AnalogyScorer(QuadrupleScorer scorer, std::vector<LabeledPair> labeled, InferenceConfig cfg,
                const EmbeddingSpace& space)
      : scorer_(std::move(scorer)), labeled_(std::move(labeled)), cfg_(cfg), space_(&space) {
    cfg_.validate();
    bool any_keep = false;
    for (const auto& p : labeled_) any_keep |= p.decision == Decision::Keep;
    if (!any_keep) throw DataError("labeled pool has no keep pair");
  }

  /// nullopt when an entity lacks an embedding under PruneOnMissing.
  std::optional<AnalogyVerdict> evaluate(const QueryPair& q) const {
    if (!space_->contains(q.seed) || !space_->contains(q.reached)) {
      if (cfg_.missing == MissingPolicy::Error)
        throw DataError("no embedding for " + (space_->contains(q.seed) ? q.reached : q.seed).str());
      return std::nullopt;
    }
    if (cfg_.layout.path_mode == PathMode::Path && q.path)
      for (const auto& n : q.path->nodes)
        if (!space_->contains(n)) {
          if (cfg_.missing == MissingPolicy::Error) throw DataError("no embedding for path node " + n.str());
          return std::nullopt;
        }
    // Per-query stream so verdicts do not depend on call order.
    std::mt19937_64 rng(util::derive_seed(cfg_.seed, util::fnv1a(q.seed.str() + '\t' + q.reached.str())));
    auto quads = build_inference_quadruples(q, labeled_, cfg_.configuration, cfg_.n, *space_, cfg_.metric);
    AnalogyVerdict v;
    v.votes.reserve(quads.size());
    for (const auto& [quad, left] : quads) v.votes.push_back({scorer_(assemble_input(quad, cfg_.layout, *space_), rng), left});
    v.outcome = aggregate_votes(cfg_.configuration, v.votes, cfg_.threshold);
    return v;
  }

  Decision decide(const EntityId& seed, const EntityId& reached, const ExpansionPath& path) const {
    auto v = evaluate({seed, reached, path});
    return v ? v->outcome.decision : Decision::Prune;
  }

  const InferenceConfig& config() const { return cfg_; }

 private:
  QuadrupleScorer scorer_;
  std::vector<LabeledPair> labeled_;
  InferenceConfig cfg_;
  const EmbeddingSpace* space_;
};

inline Decider analogy_decider(std::shared_ptr<const AnalogyScorer> scorer) {
  return [scorer = std::move(scorer)](const EntityId& s, const EntityId& r, const ExpansionPath& p) {
    return scorer->decide(s, r, p);
  };
}

inline Decider analogy_decider(const ModelParams& model, std::vector<LabeledPair> labeled, const InferenceConfig& icfg,
                               const EmbeddingSpace& space) {
  if (model.config.dim != space.dim())
    throw DataError("model expects embedding dim " + std::to_string(model.config.dim) + ", embeddings have " +
                    std::to_string(space.dim()));
  auto params = std::make_shared<const ModelParams>(model);
  return analogy_decider(std::make_shared<const AnalogyScorer>(model_scorer(params, icfg.mc_samples),
                                                               std::move(labeled), icfg, space));
}

/// Keep iff depth <= k.
inline Decider depth_decider(std::size_t k) {
  if (k == 0) throw ConfigError("depth threshold must be >= 1");
  return [k](const EntityId&, const EntityId&, const ExpansionPath& p) {
    return p.depth() <= k ? Decision::Keep : Decision::Prune;
  };
}

inline Decider keep_all_decider() {
  return [](const EntityId&, const EntityId&, const ExpansionPath&) { return Decision::Keep; };
}

/// Degree and embedding-distance thresholds (alpha, beta, gamma, absolute degree).
struct ThresholdPrunerConfig {
  double alpha = 1.5;
  double beta = 1.3;
  double gamma = 20;
  double absolute_degree = 200;
  ProximityMetric metric = ProximityMetric::Cosine;
  MissingPolicy missing = MissingPolicy::PruneOnMissing;

  void validate() const {
    if (!(alpha > 0) || !(beta > 0)) throw ConfigError("alpha and beta must be positive");
    if (!(gamma >= 1) || !(absolute_degree >= 1)) throw ConfigError("gamma and absolute degree must be >= 1");
  }
};

/// Mean proximity from the seed to its embedded level-1 downward classes; 0 when none.
inline double threshold_baseline(const KGStore& store, const EmbeddingSpace& space, const EntityId& seed,
                                 ProximityMetric metric) {
  auto sv = space.find(seed);
  if (!sv) return 0.0;
  double sum = 0;
  std::size_t n = 0;
  for (const auto& c : first_level_classes(store, seed, Direction::Downward))
    if (auto cv = space.find(c)) {
      sum += proximity(*sv, *cv, metric);
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

/// Threshold pruning, in order:
///   degree(e) > absolute_degree                    -> prune
///   dist(seed, e) > bound                          -> prune
///   degree(e) > gamma and dist(seed, e) > bound/beta -> prune
///   otherwise keep
/// with bound = alpha * baseline(seed), or alpha alone when the baseline is 0.
inline Decider threshold_decider(const ThresholdPrunerConfig& tc, const EmbeddingSpace& space, const KGStore& store) {
  tc.validate();
  return [tc, &space, &store](const EntityId& seed, const EntityId& e, const ExpansionPath&) {
    auto sv = space.find(seed);
    auto ev = space.find(e);
    if (!sv || !ev) {
      if (tc.missing == MissingPolicy::Error) throw DataError("no embedding for " + (sv ? e : seed).str());
      return Decision::Prune;
    }
    const double degree = static_cast<double>(store.node_degree(e));
    if (degree > tc.absolute_degree) return Decision::Prune;
    const double baseline = threshold_baseline(store, space, seed, tc.metric);
    const double bound = baseline > 0 ? tc.alpha * baseline : tc.alpha;
    const double dist = proximity(*sv, *ev, tc.metric);
    if (dist > bound) return Decision::Prune;
    if (degree > tc.gamma && dist > bound / tc.beta) return Decision::Prune;
    return Decision::Keep;
  };
}

/// Keep iff the MLP's (MC-averaged) score is above 0.5.
inline Decider mlp_decider(std::shared_ptr<const MlpParams> model, const EmbeddingSpace& space,
                           std::size_t mc_samples = 10, std::uint64_t seed = 0,
                           MissingPolicy missing = MissingPolicy::PruneOnMissing) {
  return [model = std::move(model), &space, mc_samples, seed, missing](const EntityId& s, const EntityId& r,
                                                                        const ExpansionPath&) {
    auto sv = space.find(s);
    auto rv = space.find(r);
    if (!sv || !rv) {
      if (missing == MissingPolicy::Error) throw DataError("no embedding for " + (sv ? r : s).str());
      return Decision::Prune;
    }
    std::mt19937_64 rng(util::derive_seed(seed, util::fnv1a(s.str() + '\t' + r.str())));
    double sc = predict(*model, mlp_input(*sv, *rv, model->config.concatenation), mc_samples, rng);
    return sc > 0.5 ? Decision::Keep : Decision::Prune;
  };
}

}  // namespace kgprune
