#pragma once

#include <map>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "kgprune/deciders.hpp"
#include "kgprune/evaluation.hpp"
#include "kgprune/training.hpp"

namespace kgprune {

/// Fills in discovery paths for labeled pairs. Paths come from a downward
/// expansion that follows the gold decisions (unlabeled nodes pruned); pairs
/// not reached that way fall back to an unpruned expansion capped at the
/// pair's depth, then to the direct [seed, reached] path.
inline std::vector<LabeledPair> attach_paths(std::vector<LabeledPair> pairs, const KGStore& store) {
  std::map<EntityId, std::vector<std::size_t>> by_seed;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_seed[pairs[i].seed].push_back(i);
  for (const auto& [seed, idx] : by_seed) {
    std::unordered_map<EntityId, Decision> gold;
    std::size_t max_depth = 1;
    for (auto i : idx) {
      gold.emplace(pairs[i].reached, pairs[i].decision);
      max_depth = std::max(max_depth, pairs[i].depth);
    }
    Decider follow_gold = [&gold](const EntityId&, const EntityId& e, const ExpansionPath&) {
      auto it = gold.find(e);
      return it != gold.end() && it->second == Decision::Keep ? Decision::Keep : Decision::Prune;
    };
    auto guided = expand_downward(store, seed, follow_gold, max_depth);
    std::optional<ExpansionResult> open;
    for (auto i : idx) {
      auto& p = pairs[i];
      if (const auto* rec = guided.find(p.reached)) {
        p.path = rec->path;
        continue;
      }
      if (!open) open = expand_downward(store, seed, keep_all_decider(), max_depth);
      if (const auto* rec = open->find(p.reached)) p.path = rec->path;
      else p.path = ExpansionPath{{p.seed, p.reached}};
    }
  }
  return pairs;
}

/// Lazily assembled model inputs for a list of training quadruples.
class QuadrupleInputs {
 public:
  QuadrupleInputs(std::vector<AnalogyQuadruple> quads, InputLayout layout, const EmbeddingSpace& space)
      : quads_(std::move(quads)), layout_(layout), space_(&space) {}

  std::size_t size() const { return quads_.size(); }

  LabeledInput operator[](std::size_t i) const {
    const auto& q = quads_[i];
    return {assemble_input(q, layout_, *space_), q.validity == Validity::Valid ? 1.0 : 0.0};
  }

  const std::vector<AnalogyQuadruple>& quadruples() const { return quads_; }

 private:
  std::vector<AnalogyQuadruple> quads_;
  InputLayout layout_;
  const EmbeddingSpace* space_;
};

/// Everything needed to train and apply the analogy classifier.
struct AnalogySpec {
  ModelConfig model{};
  InferenceConfig inference{};
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t patience = 0;

  /// Keeps model and layout shapes in agreement.
  void sync_layout() {
    inference.layout.dim = model.dim;
    inference.layout.side_length = model.side_length;
    if (inference.layout.path_mode == PathMode::NoPath) {
      inference.layout.side_length = 2;
      model.side_length = 2;
    }
  }
};

inline TrainResult<ModelParams> train_analogy_model(const AnalogySpec& spec, const std::vector<LabeledPair>& train,
                                                    const std::vector<LabeledPair>& validation,
                                                    const EmbeddingSpace& space) {
  const auto& ic = spec.inference;
  QuadrupleInputs tr(build_training_set(ic.configuration, train, ic.m, space, ic.metric), ic.layout, space);
  QuadrupleInputs va(validation.empty()
                         ? std::vector<AnalogyQuadruple>{}
                         : build_training_set(ic.configuration, validation, ic.m, space, ic.metric),
                     ic.layout, space);
  return kgprune::train(spec.model, tr, va, spec.epochs, spec.batch_size, spec.patience);
}

inline DeciderFactory analogy_factory(AnalogySpec spec, const EmbeddingSpace& space) {
  spec.sync_layout();
  return [spec, &space](const FoldData& fd) {
    AnalogySpec s = spec;
    s.model.seed = util::derive_seed(spec.model.seed, fd.seed);
    s.inference.seed = util::derive_seed(spec.inference.seed, fd.seed);
    auto trained = train_analogy_model(s, fd.train, fd.validation, space);
    return analogy_decider(trained.params, fd.train, s.inference, space);
  };
}

struct VectorExample {
  Vector input;
  double label;
};

inline std::vector<VectorExample> mlp_examples(const std::vector<LabeledPair>& pairs, const EmbeddingSpace& space,
                                               Concatenation c) {
  std::vector<VectorExample> out;
  for (const auto& p : pairs) {
    auto s = space.find(p.seed), r = space.find(p.reached);
    if (!s || !r) continue;
    out.push_back({mlp_input(*s, *r, c), p.decision == Decision::Keep ? 1.0 : 0.0});
  }
  return out;
}

struct MlpSpec {
  MlpConfig model{};
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t patience = 0;
  std::size_t mc_samples = 10;
};

inline TrainResult<MlpParams> train_mlp_model(const MlpSpec& spec, const std::vector<LabeledPair>& train,
                                              const std::vector<LabeledPair>& validation, const EmbeddingSpace& space) {
  MlpConfig cfg = spec.model;
  cfg.dim = space.dim();
  std::mt19937_64 init_rng(util::derive_seed(cfg.seed, 1));
  TrainOptions opt;
  opt.epochs = spec.epochs;
  opt.batch_size = spec.batch_size;
  opt.patience = spec.patience;
  opt.adam.learning_rate = cfg.learning_rate;
  opt.seed = util::derive_seed(cfg.seed, 2);
  return fit(init_params(cfg, init_rng), mlp_examples(train, space, cfg.concatenation),
             mlp_examples(validation, space, cfg.concatenation), opt);
}

inline DeciderFactory mlp_factory(MlpSpec spec, const EmbeddingSpace& space) {
  return [spec, &space](const FoldData& fd) {
    MlpSpec s = spec;
    s.model.seed = util::derive_seed(spec.model.seed, fd.seed);
    auto trained = train_mlp_model(s, fd.train, fd.validation, space);
    return mlp_decider(std::make_shared<const MlpParams>(std::move(trained.params)), space, s.mc_samples,
                       s.model.seed);
  };
}

inline DeciderFactory fixed_factory(Decider d) {
  return [d = std::move(d)](const FoldData&) { return d; };
}

}  // namespace kgprune
