#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgprune/expansion.hpp"
#include "kgprune/embeddings.hpp"

namespace kgprune {

/// Gold (seed, reached, decision) annotations, at most one per pair.
struct GoldDataset {
  std::string name;
  std::vector<LabeledPair> pairs;

  /// Distinct seeds in EntityId order.
  std::vector<EntityId> seeds() const {
    std::set<EntityId> s;
    for (const auto& p : pairs) s.insert(p.seed);
    return {s.begin(), s.end()};
  }

  std::vector<LabeledPair> pairs_for(const std::vector<EntityId>& seeds) const {
    std::unordered_set<EntityId> want(seeds.begin(), seeds.end());
    std::vector<LabeledPair> out;
    for (const auto& p : pairs)
      if (want.count(p.seed)) out.push_back(p);
    return out;
  }

  std::map<EntityId, std::vector<LabeledPair>> by_seed() const {
    std::map<EntityId, std::vector<LabeledPair>> m;
    for (const auto& p : pairs) m[p.seed].push_back(p);
    return m;
  }
};

/// Drops exact duplicates; conflicting decisions for one pair are an error.
inline GoldDataset make_gold_dataset(std::string name, std::vector<LabeledPair> pairs) {
  std::map<std::pair<EntityId, EntityId>, Decision> seen;
  GoldDataset ds{std::move(name), {}};
  for (auto& p : pairs) {
    auto [it, inserted] = seen.emplace(std::pair{p.seed, p.reached}, p.decision);
    if (!inserted) {
      if (it->second != p.decision)
        throw DataError("conflicting gold decisions for (" + p.seed.str() + ", " + p.reached.str() + ")");
      continue;
    }
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

/// Keeps only pairs whose seed and reached entity both have a vector.
inline GoldDataset filter_embedded(const GoldDataset& ds, const EmbeddingSpace& space) {
  GoldDataset out{ds.name, {}};
  for (const auto& p : ds.pairs)
    if (space.contains(p.seed) && space.contains(p.reached)) out.pairs.push_back(p);
  return out;
}

/// Gold decision x model fate counts.
struct ConfusionBreakdown {
  std::size_t kept_gold_keep = 0, kept_gold_prune = 0;
  std::size_t pruned_gold_keep = 0, pruned_gold_prune = 0;
  std::size_t unexplored_gold_keep = 0, unexplored_gold_prune = 0;

  std::size_t total() const {
    return kept_gold_keep + kept_gold_prune + pruned_gold_keep + pruned_gold_prune + unexplored_gold_keep +
           unexplored_gold_prune;
  }

  ConfusionBreakdown& operator+=(const ConfusionBreakdown& o) {
    kept_gold_keep += o.kept_gold_keep;
    kept_gold_prune += o.kept_gold_prune;
    pruned_gold_keep += o.pruned_gold_keep;
    pruned_gold_prune += o.pruned_gold_prune;
    unexplored_gold_keep += o.unexplored_gold_keep;
    unexplored_gold_prune += o.unexplored_gold_prune;
    return *this;
  }

  void add(NodeFate fate, Decision gold) {
    const bool k = gold == Decision::Keep;
    switch (fate) {
      case NodeFate::Kept: ++(k ? kept_gold_keep : kept_gold_prune); break;
      case NodeFate::Pruned: ++(k ? pruned_gold_keep : pruned_gold_prune); break;
      case NodeFate::Unexplored: ++(k ? unexplored_gold_keep : unexplored_gold_prune); break;
    }
  }

  friend bool operator==(const ConfusionBreakdown&, const ConfusionBreakdown&) = default;
};

inline NodeFate fate_of(const ExpansionResult& r, const EntityId& e) {
  const auto* rec = r.find(e);
  return rec ? rec->fate : NodeFate::Unexplored;
}

/// Buckets each gold pair by the fate of its reached entity. Unlabeled
/// visited nodes are ignored.
inline ConfusionBreakdown score_run(const ExpansionResult& result, std::span<const LabeledPair> gold) {
  ConfusionBreakdown cb;
  for (const auto& g : gold) {
    if (g.seed != result.seed)
      throw DataError("gold pair seed " + g.seed.str() + " does not match expansion seed " + result.seed.str());
    cb.add(fate_of(result, g.reached), g.decision);
  }
  return cb;
}

/// Keep is the positive class.
struct MetricsReport {
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};

inline MetricsReport compute_metrics(const ConfusionBreakdown& cb) {
  MetricsReport m;
  const auto tp = static_cast<double>(cb.kept_gold_keep);
  const std::size_t emitted = cb.kept_gold_keep + cb.kept_gold_prune;
  const std::size_t gold_keep = cb.kept_gold_keep + cb.unexplored_gold_keep + cb.pruned_gold_keep;
  const std::size_t all = cb.total();
  m.precision = emitted ? tp / static_cast<double>(emitted) : 0.0;
  m.recall = gold_keep ? tp / static_cast<double>(gold_keep) : 0.0;
  m.accuracy = all ? static_cast<double>(cb.kept_gold_keep + cb.pruned_gold_prune) / static_cast<double>(all) : 0.0;
  m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

struct MeanStd {
  MetricsReport mean, std;
};

/// Mean and sample (n-1) standard deviation per metric.
inline MeanStd summarize(std::span<const MetricsReport> runs) {
  MeanStd out;
  if (runs.empty()) return out;
  const double n = static_cast<double>(runs.size());
  auto fields = [](MetricsReport& m) { return std::array<double*, 4>{&m.precision, &m.recall, &m.f1, &m.accuracy}; };
  auto mean = fields(out.mean), sd = fields(out.std);
  for (std::size_t f = 0; f < 4; ++f) {
    double s = 0;
    for (auto r : runs) s += *fields(r)[f];
    *mean[f] = s / n;
    if (runs.size() > 1) {
      double ss = 0;
      for (auto r : runs) {
        const double d = *fields(r)[f] - *mean[f];
        ss += d * d;
      }
      *sd[f] = std::sqrt(ss / (n - 1.0));
    }
  }
  return out;
}

/// Shuffles the seeds (sorted first) and deals them into `k` contiguous sets
/// whose sizes differ by at most one.
inline std::vector<std::vector<EntityId>> split_folds(std::vector<EntityId> seeds, std::size_t k, std::uint64_t rng_seed) {
  if (seeds.size() < k) throw DataError("need at least " + std::to_string(k) + " seed entities, got " +
                                        std::to_string(seeds.size()));
  std::sort(seeds.begin(), seeds.end());
  std::mt19937_64 rng(rng_seed);
  std::shuffle(seeds.begin(), seeds.end(), rng);
  std::vector<std::vector<EntityId>> folds(k);
  const std::size_t base = seeds.size() / k, extra = seeds.size() % k;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    folds[i].assign(seeds.begin() + static_cast<std::ptrdiff_t>(pos), seeds.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

struct FoldData {
  std::size_t fold = 0;  // 1-based; 0 for a single transfer split
  std::uint64_t seed = 0;
  std::vector<LabeledPair> train, validation, test;
};

/// Builds the keep/prune decider for one fold, training as needed.
using DeciderFactory = std::function<Decider(const FoldData&)>;

enum class Averaging { Micro, Macro };

struct EvalOptions {
  std::optional<std::size_t> max_depth;
  Averaging averaging = Averaging::Micro;
  bool seen_unseen = false;
};

struct SeenUnseenReport {
  ConfusionBreakdown seen_counts, unseen_counts;
  MetricsReport seen, unseen;
  std::size_t seen_pairs = 0, unseen_pairs = 0;
  double seen_rate = 0;  // percent
};

struct RunReport {
  ConfusionBreakdown counts;
  MetricsReport metrics;
  std::map<EntityId, ExpansionResult> results;
  std::optional<SeenUnseenReport> seen_unseen;
};

/// Gold test pairs are Seen iff their reached entity occurs as a reached
/// entity in the training pairs.
inline SeenUnseenReport seen_unseen_breakdown(const std::map<EntityId, ExpansionResult>& results,
                                              std::span<const LabeledPair> test_gold,
                                              std::span<const LabeledPair> training) {
  std::unordered_set<EntityId> trained;
  for (const auto& p : training) trained.insert(p.reached);
  SeenUnseenReport r;
  for (const auto& g : test_gold) {
    auto it = results.find(g.seed);
    const NodeFate fate = it == results.end() ? NodeFate::Unexplored : fate_of(it->second, g.reached);
    if (trained.count(g.reached)) {
      r.seen_counts.add(fate, g.decision);
      ++r.seen_pairs;
    } else {
      r.unseen_counts.add(fate, g.decision);
      ++r.unseen_pairs;
    }
  }
  r.seen = compute_metrics(r.seen_counts);
  r.unseen = compute_metrics(r.unseen_counts);
  const std::size_t all = r.seen_pairs + r.unseen_pairs;
  r.seen_rate = all ? 100.0 * static_cast<double>(r.seen_pairs) / static_cast<double>(all) : 0.0;
  return r;
}

/// Expands every seed of `test` with `decider` and scores against the gold pairs.
inline RunReport evaluate_decider(const KGStore& store, const Decider& decider, std::span<const LabeledPair> test,
                                  const EvalOptions& opt, std::span<const LabeledPair> training = {}) {
  std::map<EntityId, std::vector<LabeledPair>> gold;
  for (const auto& p : test) gold[p.seed].push_back(p);
  RunReport rep;
  std::vector<MetricsReport> per_seed;
  for (const auto& [seed, pairs] : gold) {
    auto result = expand_downward(store, seed, decider, opt.max_depth);
    auto cb = score_run(result, pairs);
    rep.counts += cb;
    per_seed.push_back(compute_metrics(cb));
    rep.results.emplace(seed, std::move(result));
  }
  rep.metrics = opt.averaging == Averaging::Micro ? compute_metrics(rep.counts) : summarize(per_seed).mean;
  if (opt.seen_unseen) rep.seen_unseen = seen_unseen_breakdown(rep.results, test, training);
  return rep;
}

struct FoldReport {
  std::size_t fold;
  RunReport run;
};

struct CrossValidationReport {
  std::vector<FoldReport> folds;
  MeanStd aggregate;
};

/// 5-fold CV over seeds: fold i tests S_i, validates on S_{i-1} (cyclic),
/// trains on the rest.
inline CrossValidationReport cross_validate(const GoldDataset& ds, const KGStore& store, const DeciderFactory& factory,
                                            std::uint64_t rng_seed, const EvalOptions& opt = {},
                                            std::size_t k = 5) {
  auto folds = split_folds(ds.seeds(), k, rng_seed);
  CrossValidationReport rep;
  std::vector<MetricsReport> metrics;
  for (std::size_t i = 0; i < k; ++i) {
    FoldData fd;
    fd.fold = i + 1;
    fd.seed = util::derive_seed(rng_seed, i + 1);
    std::vector<EntityId> train_seeds;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i && j != (i + k - 1) % k) train_seeds.insert(train_seeds.end(), folds[j].begin(), folds[j].end());
    fd.train = ds.pairs_for(train_seeds);
    fd.validation = ds.pairs_for(folds[(i + k - 1) % k]);
    fd.test = ds.pairs_for(folds[i]);
    Decider decider = factory(fd);
    rep.folds.push_back({fd.fold, evaluate_decider(store, decider, fd.test, opt, fd.train)});
    metrics.push_back(rep.folds.back().run.metrics);
  }
  rep.aggregate = summarize(metrics);
  return rep;
}

/// Trains once on an 80/20 seed split of `train_ds`, tests on all of `test_ds`.
inline RunReport transfer_run(const GoldDataset& train_ds, const GoldDataset& test_ds, const KGStore& store,
                              const DeciderFactory& factory, std::uint64_t rng_seed, const EvalOptions& opt = {}) {
  if (train_ds.name == test_ds.name) throw ConfigError("transfer requires distinct train and test datasets");
  auto seeds = train_ds.seeds();
  if (seeds.empty()) throw DataError("training dataset has no seeds");
  std::mt19937_64 rng(rng_seed);
  std::shuffle(seeds.begin(), seeds.end(), rng);
  std::size_t n_val = seeds.size() / 5;
  if (n_val == 0 && seeds.size() >= 2) n_val = 1;
  FoldData fd;
  fd.seed = util::derive_seed(rng_seed, 0);
  fd.validation = train_ds.pairs_for({seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(n_val)});
  fd.train = train_ds.pairs_for({seeds.begin() + static_cast<std::ptrdiff_t>(n_val), seeds.end()});
  fd.test = test_ds.pairs;
  Decider decider = factory(fd);
  return evaluate_decider(store, decider, fd.test, opt, fd.train);
}

inline std::string metrics_row(const std::string& fold, const std::string& model, const MetricsReport& m) {
  return fold + '\t' + model + '\t' + util::format_double(m.precision) + '\t' + util::format_double(m.recall) + '\t' +
         util::format_double(m.f1) + '\t' + util::format_double(m.accuracy) + '\n';
}

/// Machine-readable `fold TAB model TAB P TAB R TAB F1 TAB ACC` records: one
/// row per fold, one `mean` row, and the standard deviations as a comment.
inline std::string cv_records(const CrossValidationReport& rep, const std::string& model) {
  std::string out;
  for (const auto& f : rep.folds) out += metrics_row(std::to_string(f.fold), model, f.run.metrics);
  out += metrics_row("mean", model, rep.aggregate.mean);
  out += "# " + metrics_row("std", model, rep.aggregate.std);
  return out;
}

inline std::string percent(double v) { return util::format_double(100.0 * v, 2); }

inline std::string cv_table(const CrossValidationReport& rep, const std::string& model) {
  std::ostringstream s;
  s << "model: " << model << "\n";
  s << "fold      P        R        F1       ACC\n";
  for (const auto& f : rep.folds) {
    const auto& m = f.run.metrics;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-6zu %8s %8s %8s %8s\n", f.fold, percent(m.precision).c_str(),
                  percent(m.recall).c_str(), percent(m.f1).c_str(), percent(m.accuracy).c_str());
    s << buf;
  }
  const auto& a = rep.aggregate;
  s << "mean   " << percent(a.mean.precision) << " ± " << percent(a.std.precision) << "  " << percent(a.mean.recall)
    << " ± " << percent(a.std.recall) << "  " << percent(a.mean.f1) << " ± " << percent(a.std.f1) << "  "
    << percent(a.mean.accuracy) << " ± " << percent(a.std.accuracy) << '\n';
  return s.str();
}

}  // namespace kgprune
