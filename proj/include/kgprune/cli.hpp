#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgprune/config.hpp"
#include "kgprune/pipeline.hpp"
#include "kgprune/synthetic.hpp"

namespace kgprune::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kPartial = 3 };

enum class DeciderKind { KeepAll, Depth, Threshold, Analogy, PathAnalogy, Mlp };

inline std::string_view to_string(DeciderKind k) {
  switch (k) {
    case DeciderKind::KeepAll: return "keep_all";
    case DeciderKind::Depth: return "depth";
    case DeciderKind::Threshold: return "threshold";
    case DeciderKind::Analogy: return "analogy";
    case DeciderKind::PathAnalogy: return "path_analogy";
    case DeciderKind::Mlp: return "mlp";
  }
  return "?";
}

/// Validated run configuration for one grid point.
struct RunConfig {
  std::optional<std::filesystem::path> triples, degrees, embeddings, dataset, train_dataset, test_dataset,
      checkpoint, pool;
  EmbeddingFormat embeddings_format = EmbeddingFormat::Text;
  std::string train_name, test_name;
  std::uint64_t seed = 0;
  DeciderKind decider = DeciderKind::PathAnalogy;
  EmbeddingKind embedding = EmbeddingKind::E1;
  ProximityMetric metric = ProximityMetric::Cosine;
  EvalOptions eval{};
  std::size_t folds = 5;
  AnalogySpec analogy{};
  MlpSpec mlp{};
  std::size_t depth_k = 3;
  ThresholdPrunerConfig threshold{};

  bool uses_analogy() const { return decider == DeciderKind::Analogy || decider == DeciderKind::PathAnalogy; }
};

namespace detail {

/// Reads typed values, collecting every problem instead of stopping at the first.
class Reader {
 public:
  Reader(const Config& c, std::vector<std::string>& errors) : c_(c), errors_(errors) {}

  template <class T>
  T number(const std::string& key, T fallback) {
    auto v = c_.get(key);
    if (!v) return fallback;
    try {
      if constexpr (std::is_floating_point_v<T>) return static_cast<T>(util::parse_double(*v));
      else return static_cast<T>(util::parse_u64(*v));
    } catch (const Error& e) {
      errors_.push_back(key + ": " + e.what());
      return fallback;
    }
  }

  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<std::string_view, E>> options) {
    auto v = c_.get(key);
    if (!v) return fallback;
    for (const auto& [name, value] : options)
      if (*v == name) return value;
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + std::string(o.first);
    errors_.push_back(key + ": expected " + allowed + ", got '" + *v + "'");
    return fallback;
  }

  bool flag(const std::string& key, bool fallback) {
    return choice<bool>(key, fallback, {{"true", true}, {"false", false}, {"1", true}, {"0", false}});
  }

  std::optional<std::filesystem::path> path(const std::string& key) { return c_.path(key); }

 private:
  const Config& c_;
  std::vector<std::string>& errors_;
};

inline std::vector<std::size_t> parse_widths(const std::string& s, std::vector<std::string>& errors) {
  std::vector<std::size_t> out;
  for (auto part : util::split(s, '-')) {
    try {
      out.push_back(util::parse_u64(part));
    } catch (const Error&) {
      errors.push_back("mlp.hidden: bad layer width list '" + s + "'");
      return {200, 100, 50};
    }
  }
  return out;
}

}  // namespace detail

inline RunConfig read_run_config(const Config& c, std::vector<std::string>& errors) {
  detail::Reader r(c, errors);
  RunConfig rc;
  rc.triples = r.path("paths.triples");
  rc.degrees = r.path("paths.degrees");
  rc.embeddings = r.path("paths.embeddings");
  rc.dataset = r.path("paths.dataset");
  rc.train_dataset = r.path("paths.train_dataset");
  rc.test_dataset = r.path("paths.test_dataset");
  rc.checkpoint = r.path("paths.checkpoint");
  rc.pool = r.path("paths.pool");
  rc.embeddings_format = r.choice("paths.embeddings_format", EmbeddingFormat::Text,
                                  {{"text", EmbeddingFormat::Text}, {"binary", EmbeddingFormat::Binary}});
  rc.train_name = c.get("paths.train_dataset_name").value_or(rc.train_dataset ? rc.train_dataset->stem().string() : "");
  rc.test_name = c.get("paths.test_dataset_name").value_or(rc.test_dataset ? rc.test_dataset->stem().string() : "");

  if (!c.has("run.seed")) errors.push_back("run.seed is required (set it in the config or pass --seed)");
  rc.seed = r.number<std::uint64_t>("run.seed", 0);
  rc.decider = r.choice("run.decider", DeciderKind::PathAnalogy,
                        {{"keep_all", DeciderKind::KeepAll},
                         {"depth", DeciderKind::Depth},
                         {"threshold", DeciderKind::Threshold},
                         {"analogy", DeciderKind::Analogy},
                         {"path_analogy", DeciderKind::PathAnalogy},
                         {"mlp", DeciderKind::Mlp}});
  rc.embedding = r.choice("run.embedding", EmbeddingKind::E1, {{"E1", EmbeddingKind::E1}, {"E2", EmbeddingKind::E2}});
  rc.metric = r.choice("run.metric", ProximityMetric::Cosine,
                       {{"cosine", ProximityMetric::Cosine}, {"euclidean", ProximityMetric::Euclidean}});
  if (c.has("run.max_depth")) rc.eval.max_depth = r.number<std::size_t>("run.max_depth", 0);
  rc.eval.averaging = r.choice("run.averaging", Averaging::Micro, {{"micro", Averaging::Micro}, {"macro", Averaging::Macro}});
  rc.eval.seen_unseen = r.flag("run.seen_unseen", false);
  rc.folds = r.number<std::size_t>("run.folds", 5);
  if (rc.folds < 2) errors.push_back("run.folds must be >= 2");

  auto& a = rc.analogy;
  const std::uint64_t model_seed = util::derive_seed(rc.seed, 11);
  a.model.n1 = r.number<std::size_t>("model.n1", 16);
  a.model.n2 = r.number<std::size_t>("model.n2", 8);
  a.model.side_length = r.number<std::size_t>("model.path_length", 3);
  a.model.dropout = r.number<double>("model.dropout", 0.0);
  a.model.learning_rate = r.number<double>("model.learning_rate", 1e-3);
  a.model.seed = model_seed;
  a.epochs = r.number<std::size_t>("model.epochs", 50);
  a.batch_size = r.number<std::size_t>("model.batch_size", 32);
  a.patience = r.number<std::size_t>("model.patience", 0);
  auto& ic = a.inference;
  ic.configuration = r.choice("analogy.configuration", AnalogyConfiguration::C1,
                              {{"C1", AnalogyConfiguration::C1}, {"C2", AnalogyConfiguration::C2}, {"C3", AnalogyConfiguration::C3}});
  ic.m = r.number<std::size_t>("analogy.M", 10);
  ic.n = r.number<std::size_t>("analogy.N", 20);
  ic.threshold = r.number<double>("analogy.threshold", 0.5);
  ic.layout.padding = r.choice("analogy.padding", Padding::Between,
                               {{"before", Padding::Before}, {"between", Padding::Between}, {"after", Padding::After}});
  ic.missing = r.choice("analogy.missing", MissingPolicy::PruneOnMissing,
                        {{"prune", MissingPolicy::PruneOnMissing}, {"error", MissingPolicy::Error}});
  ic.mc_samples = r.number<std::size_t>("model.mc_samples", 10);
  ic.metric = rc.metric;
  ic.seed = util::derive_seed(rc.seed, 12);
  ic.layout.path_mode = rc.decider == DeciderKind::PathAnalogy ? PathMode::Path : PathMode::NoPath;

  rc.depth_k = r.number<std::size_t>("depth.k", 3);
  if (rc.depth_k == 0) errors.push_back("depth.k must be >= 1");
  rc.threshold.alpha = r.number<double>("threshold.alpha", 1.5);
  rc.threshold.beta = r.number<double>("threshold.beta", 1.3);
  rc.threshold.gamma = r.number<double>("threshold.gamma", 20);
  rc.threshold.absolute_degree = r.number<double>("threshold.absolute_degree", 200);
  rc.threshold.metric = rc.metric;

  auto& m = rc.mlp;
  if (auto h = c.get("mlp.hidden")) m.model.hidden = detail::parse_widths(*h, errors);
  m.model.concatenation = r.choice("mlp.concatenation", Concatenation::Horizontal,
                                   {{"horizontal", Concatenation::Horizontal}, {"translation", Concatenation::Translation}});
  m.model.learning_rate = r.number<double>("mlp.learning_rate", 1e-3);
  m.model.dropout = r.number<double>("mlp.dropout", 0.0);
  m.model.seed = util::derive_seed(rc.seed, 13);
  m.epochs = a.epochs;
  m.batch_size = a.batch_size;
  m.patience = a.patience;
  m.mc_samples = ic.mc_samples;

  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  };
  if (rc.uses_analogy()) {
    check([&] {
      AnalogySpec probe = a;
      probe.model.dim = 2;
      probe.sync_layout();
      probe.model.validate();
      if (ic.n == 0 || ic.m == 0) throw ConfigError("analogy.N and analogy.M must be >= 1");
      if (!(ic.threshold >= 0.0 && ic.threshold <= 1.0)) throw ConfigError("analogy.threshold must be in [0, 1]");
    });
  }
  if (rc.decider == DeciderKind::Threshold) check([&] { rc.threshold.validate(); });
  if (rc.decider == DeciderKind::Mlp) check([&] { m.model.validate(); });
  return rc;
}

inline void require_files(const RunConfig& rc, std::initializer_list<const char*> keys, std::vector<std::string>& errors) {
  for (std::string_view key : keys) {
    const std::optional<std::filesystem::path>* p = nullptr;
    if (key == "triples") p = &rc.triples;
    else if (key == "embeddings") p = &rc.embeddings;
    else if (key == "dataset") p = &rc.dataset;
    else if (key == "train_dataset") p = &rc.train_dataset;
    else if (key == "test_dataset") p = &rc.test_dataset;
    else if (key == "checkpoint") p = &rc.checkpoint;
    else if (key == "pool") p = &rc.pool;
    if (!p || !*p) {
      errors.push_back("paths." + std::string(key) + " is required");
      continue;
    }
    if (!std::filesystem::exists(**p)) errors.push_back("paths." + std::string(key) + ": no such file " + (*p)->string());
  }
  if (rc.degrees && !std::filesystem::exists(*rc.degrees))
    errors.push_back("paths.degrees: no such file " + rc.degrees->string());
}

/// Loaded store and embeddings shared by a command.
struct Workspace {
  KGStore store;
  EmbeddingTable table;

  static std::unique_ptr<Workspace> load(const RunConfig& rc, bool need_embeddings) {
    auto ws = std::make_unique<Workspace>();
    ws->store = load_store(*rc.triples);
    if (rc.degrees) {
      std::ifstream in(*rc.degrees);
      ws->store = apply_degree_sidecar(std::move(ws->store), in);
    }
    if (need_embeddings) {
      std::ifstream in(*rc.embeddings, std::ios::binary);
      if (!in) throw DataError("cannot open " + rc.embeddings->string());
      ws->table = load_embeddings(in, rc.embeddings_format);
    }
    return ws;
  }
};

inline bool needs_embeddings(const RunConfig& rc) {
  return rc.decider != DeciderKind::KeepAll && rc.decider != DeciderKind::Depth;
}

inline GoldDataset load_dataset(const std::filesystem::path& p, const std::string& name, const EmbeddingSpace* space,
                                const KGStore& store, bool with_paths, std::ostream& log) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  GoldDataset ds = make_gold_dataset(name, read_labeled_pairs(in));
  if (space) {
    const std::size_t before = ds.pairs.size();
    ds = filter_embedded(ds, *space);
    if (ds.pairs.size() != before)
      log << "dataset " << name << ": dropped " << before - ds.pairs.size() << " pairs without embeddings\n";
  }
  if (with_paths) ds.pairs = attach_paths(std::move(ds.pairs), store);
  return ds;
}

inline std::string model_label(const RunConfig& rc, const std::string& grid_label) {
  std::string s(to_string(rc.decider));
  if (!grid_label.empty()) s += "[" + grid_label + "]";
  return s;
}

inline ModelParams read_checkpoint_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return read_checkpoint(in);
}

/// Decider built from a trained checkpoint or from a rule; used by expand/evaluate.
inline Decider make_fixed_decider(const RunConfig& rc, const Workspace& ws, const EmbeddingSpace* space) {
  switch (rc.decider) {
    case DeciderKind::KeepAll: return keep_all_decider();
    case DeciderKind::Depth: return depth_decider(rc.depth_k);
    case DeciderKind::Threshold: return threshold_decider(rc.threshold, *space, ws.store);
    case DeciderKind::Analogy:
    case DeciderKind::PathAnalogy: {
      ModelParams model = read_checkpoint_file(*rc.checkpoint);
      if (model.config.dim != space->dim())
        throw DataError("checkpoint expects embedding dim " + std::to_string(model.config.dim) + " but embeddings have " +
                        std::to_string(space->dim()));
      std::ifstream in(*rc.pool);
      auto pool = read_labeled_pairs(in);
      if (rc.decider == DeciderKind::PathAnalogy) pool = attach_paths(std::move(pool), ws.store);
      InferenceConfig ic = rc.analogy.inference;
      ic.layout.dim = model.config.dim;
      ic.layout.side_length = model.config.side_length;
      if (ic.layout.path_mode == PathMode::NoPath && ic.layout.side_length != 2)
        throw DataError("checkpoint was trained with paths; use decider = path_analogy");
      return analogy_decider(model, std::move(pool), ic, *space);
    }
    case DeciderKind::Mlp: throw ConfigError("mlp decider is only available in cv and transfer");
  }
  throw ConfigError("unknown decider");
}

inline DeciderFactory make_factory(const RunConfig& rc, const Workspace& ws, const EmbeddingSpace* space) {
  switch (rc.decider) {
    case DeciderKind::Analogy:
    case DeciderKind::PathAnalogy: {
      AnalogySpec spec = rc.analogy;
      spec.model.dim = space->dim();
      spec.sync_layout();
      return analogy_factory(spec, *space);
    }
    case DeciderKind::Mlp: return mlp_factory(rc.mlp, *space);
    default: return fixed_factory(make_fixed_decider(rc, ws, space));
  }
}

inline std::string report_header(const Config& c) {
  return "# config_digest " + c.digest() + "\n# fold\tmodel\tP\tR\tF1\tACC\n";
}

inline std::string seen_unseen_row(const std::string& fold, const std::string& model, const SeenUnseenReport& s) {
  auto m = [](const MetricsReport& r) {
    return util::format_double(r.precision) + '\t' + util::format_double(r.recall) + '\t' + util::format_double(r.f1) +
           '\t' + util::format_double(r.accuracy);
  };
  return fold + '\t' + model + '\t' + util::format_double(s.seen_rate, 2) + '\t' + m(s.seen) + '\t' + m(s.unseen) + '\n';
}

struct CommandContext {
  Config config;
  std::filesystem::path output;
  std::ostream& out;
  std::ostream& err;
};

/// Validates every grid point before any work is done.
inline std::vector<std::pair<std::string, RunConfig>> validated_points(const Config& config,
                                                                       std::initializer_list<const char*> files) {
  std::vector<std::string> errors;
  std::vector<std::pair<std::string, RunConfig>> points;
  for (auto& [label, c] : config.expand_grid()) {
    std::vector<std::string> e;
    RunConfig rc = read_run_config(c, e);
    require_files(rc, files, e);
    for (auto& msg : e) errors.push_back(label.empty() ? msg : "[" + label + "] " + msg);
    points.emplace_back(label, std::move(rc));
  }
  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end());
    errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return points;
}

inline RunConfig single_point(const Config& config, std::initializer_list<const char*> files) {
  auto pts = validated_points(config, files);
  if (pts.size() != 1) throw ConfigError("grid values are only supported by the cv command");
  return pts.front().second;
}

inline int cmd_ingest(CommandContext& ctx, const std::optional<std::filesystem::path>& triples_flag,
                      const std::optional<std::filesystem::path>& degrees_flag) {
  auto triples = triples_flag ? triples_flag : ctx.config.path("paths.triples");
  auto degrees = degrees_flag ? degrees_flag : ctx.config.path("paths.degrees");
  if (!triples) throw ConfigError("paths.triples is required (or --triples)");
  std::ifstream in(*triples);
  if (!in) throw DataError("cannot open " + triples->string());
  KGStore store = ingest_triples(in);
  if (degrees) {
    std::ifstream d(*degrees);
    if (!d) throw DataError("cannot open " + degrees->string());
    store = apply_degree_sidecar(std::move(store), d);
  }
  const std::string snapshot = write_snapshot(store);
  util::write_file_atomic(ctx.output / "store.snapshot", snapshot);
  std::ostringstream summary;
  summary << "entities\t" << store.entity_count() << "\nedges\t" << store.triple_count() << "\nhierarchy_edges\t"
          << store.hierarchy_edge_count() << "\nsnapshot_digest\t" << util::hex64(util::fnv1a(snapshot)) << '\n';
  util::write_file_atomic(ctx.output / "ingest_summary.tsv", summary.str());
  ctx.out << summary.str();
  return kSuccess;
}

inline int cmd_train(CommandContext& ctx) {
  RunConfig rc = single_point(ctx.config, {"triples", "embeddings", "dataset"});
  if (!rc.uses_analogy()) throw ConfigError("train requires decider = analogy or path_analogy");
  auto ws = Workspace::load(rc, true);
  EmbeddingSpace space(ws->table, ws->store, rc.embedding);
  GoldDataset ds = load_dataset(*rc.dataset, rc.dataset->stem().string(), &space, ws->store,
                                rc.decider == DeciderKind::PathAnalogy, ctx.err);

  auto seeds = ds.seeds();
  std::mt19937_64 rng(util::derive_seed(rc.seed, 21));
  std::shuffle(seeds.begin(), seeds.end(), rng);
  const std::size_t n_val = seeds.size() >= 2 ? std::max<std::size_t>(1, seeds.size() / 5) : 0;
  auto val = ds.pairs_for({seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(n_val)});
  auto train = ds.pairs_for({seeds.begin() + static_cast<std::ptrdiff_t>(n_val), seeds.end()});

  AnalogySpec spec = rc.analogy;
  spec.model.dim = space.dim();
  spec.sync_layout();
  const std::size_t count = parameter_count(spec.model);
  ctx.out << "parameter_count\t" << count << '\n';
  auto result = train_analogy_model(spec, train, val, space);
  const auto& ic = spec.inference;
  QuadrupleInputs train_inputs(build_training_set(ic.configuration, train, ic.m, space, ic.metric), ic.layout, space);
  const double train_acc = accuracy(result.params, train_inputs);

  std::ostringstream log;
  log << "# config_digest " << ctx.config.digest() << "\n# parameter_count " << count << "\n# epoch\ttrain_loss\tval_loss\n";
  for (const auto& e : result.history.epochs)
    log << e.epoch << '\t' << util::format_double(e.train_loss, 9) << '\t'
        << (e.val_loss ? util::format_double(*e.val_loss, 9) : "nan") << '\n';
  log << "# best_epoch " << result.history.best_epoch << "\n# train_accuracy " << util::format_double(train_acc) << '\n';
  std::ostringstream ckpt, pool;
  write_checkpoint(ckpt, result.params);
  write_labeled_pairs(pool, train);
  util::write_file_atomic(ctx.output / "model.anet", ckpt.str());
  util::write_file_atomic(ctx.output / "model.summary.txt", checkpoint_summary(result.params, result.history.best_val_loss));
  util::write_file_atomic(ctx.output / "train_log.tsv", log.str());
  util::write_file_atomic(ctx.output / "pool.tsv", pool.str());
  ctx.out << "train_quadruples\t" << train_inputs.size() << "\nbest_epoch\t" << result.history.best_epoch
          << "\ntrain_accuracy\t" << util::format_double(train_acc) << '\n';
  return kSuccess;
}

inline int cmd_expand(CommandContext& ctx, const std::vector<std::string>& seed_args) {
  RunConfig rc = ctx.config.has("run.seed") ? single_point(ctx.config, {"triples"}) : RunConfig{};
  if (!ctx.config.has("run.seed")) single_point(ctx.config, {"triples"});  // reports the missing seed
  std::vector<std::string> errors;
  if (needs_embeddings(rc)) require_files(rc, {"embeddings"}, errors);
  if (rc.uses_analogy()) require_files(rc, {"checkpoint", "pool"}, errors);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  if (seed_args.empty()) throw ConfigError("expand needs at least one --seeds entry");
  auto ws = Workspace::load(rc, needs_embeddings(rc));
  std::unique_ptr<EmbeddingSpace> space;
  if (needs_embeddings(rc)) space = std::make_unique<EmbeddingSpace>(ws->table, ws->store, rc.embedding);
  Decider decider = make_fixed_decider(rc, *ws, space.get());

  std::ostringstream summary;
  summary << "# config_digest " << ctx.config.digest() << "\n# seed\tkept\tpruned\tupward\n";
  bool partial = false;
  for (const auto& s : seed_args) {
    EntityId seed(s);
    if (!ws->store.contains(seed)) {
      ctx.err << "warning: seed " << seed << " not found in the store, skipped\n";
      partial = true;
      continue;
    }
    auto result = expand_downward(ws->store, seed, decider, rc.eval.max_depth);
    std::ostringstream rec;
    write_expansion(rec, result);
    util::write_file_atomic(ctx.output / "expansions" / (seed.str() + ".tsv"), rec.str());
    summary << seed << '\t' << result.count(NodeFate::Kept) << '\t' << result.count(NodeFate::Pruned) << '\t'
            << expand_upward(ws->store, seed).size() << '\n';
  }
  util::write_file_atomic(ctx.output / "expand_summary.tsv", summary.str());
  ctx.out << summary.str();
  return partial ? kPartial : kSuccess;
}

inline void write_reports(CommandContext& ctx, const std::string& records, const std::string& table,
                          const std::string& seen_rows) {
  util::write_file_atomic(ctx.output / "report.tsv", report_header(ctx.config) + records);
  util::write_file_atomic(ctx.output / "report.txt", table);
  if (!seen_rows.empty())
    util::write_file_atomic(ctx.output / "seen_unseen.tsv",
                            "# config_digest " + ctx.config.digest() +
                                "\n# fold\tmodel\tseen_rate\tseen_P\tseen_R\tseen_F1\tseen_ACC\tunseen_P\tunseen_R\t"
                                "unseen_F1\tunseen_ACC\n" +
                                seen_rows);
  ctx.out << table;
}

inline int cmd_evaluate(CommandContext& ctx) {
  RunConfig rc = single_point(ctx.config, {"triples", "dataset"});
  std::vector<std::string> errors;
  if (needs_embeddings(rc)) require_files(rc, {"embeddings"}, errors);
  if (rc.uses_analogy()) require_files(rc, {"checkpoint", "pool"}, errors);
  if (rc.decider == DeciderKind::Mlp) errors.push_back("evaluate does not support the mlp decider; use cv");
  if (!errors.empty()) throw ConfigError("invalid configuration:\n  " + errors.front());
  auto ws = Workspace::load(rc, needs_embeddings(rc));
  std::unique_ptr<EmbeddingSpace> space;
  if (needs_embeddings(rc)) space = std::make_unique<EmbeddingSpace>(ws->table, ws->store, rc.embedding);
  Decider decider = make_fixed_decider(rc, *ws, space.get());
  GoldDataset ds = load_dataset(*rc.dataset, rc.dataset->stem().string(), space.get(), ws->store, false, ctx.err);
  std::vector<LabeledPair> training;
  if (rc.pool) {
    std::ifstream in(*rc.pool);
    training = read_labeled_pairs(in);
  }
  auto rep = evaluate_decider(ws->store, decider, ds.pairs, rc.eval, training);
  const std::string model = model_label(rc, "");
  std::ostringstream table;
  table << "model: " << model << "\nP " << percent(rep.metrics.precision) << "  R " << percent(rep.metrics.recall)
        << "  F1 " << percent(rep.metrics.f1) << "  ACC " << percent(rep.metrics.accuracy) << '\n';
  write_reports(ctx, metrics_row("all", model, rep.metrics), table.str(),
                rep.seen_unseen ? seen_unseen_row("all", model, *rep.seen_unseen) : "");
  return kSuccess;
}

inline int cmd_cv(CommandContext& ctx) {
  auto points = validated_points(ctx.config, {"triples", "dataset"});
  {
    std::vector<std::string> errors;
    for (const auto& [label, rc] : points)
      if (needs_embeddings(rc)) require_files(rc, {"embeddings"}, errors);
    if (!errors.empty()) throw ConfigError("invalid configuration:\n  " + errors.front());
  }
  const RunConfig& first = points.front().second;
  bool any_embeddings = false;
  for (const auto& [_, rc] : points) any_embeddings |= needs_embeddings(rc);
  auto ws = Workspace::load(first, any_embeddings);

  std::string records, table, seen_rows;
  for (const auto& [label, rc] : points) {
    std::unique_ptr<EmbeddingSpace> space;
    if (any_embeddings) space = std::make_unique<EmbeddingSpace>(ws->table, ws->store, rc.embedding);
    GoldDataset ds = load_dataset(*rc.dataset, rc.dataset->stem().string(), space.get(), ws->store,
                                  rc.decider == DeciderKind::PathAnalogy, ctx.err);
    const std::string model = model_label(rc, label);
    auto rep = cross_validate(ds, ws->store, make_factory(rc, *ws, space.get()), rc.seed, rc.eval, rc.folds);
    records += cv_records(rep, model);
    table += cv_table(rep, model) + "\n";
    if (rc.eval.seen_unseen)
      for (const auto& f : rep.folds)
        if (f.run.seen_unseen) seen_rows += seen_unseen_row(std::to_string(f.fold), model, *f.run.seen_unseen);
  }
  write_reports(ctx, records, table, seen_rows);
  return kSuccess;
}

inline int cmd_transfer(CommandContext& ctx) {
  RunConfig rc = single_point(ctx.config, {"triples", "train_dataset", "test_dataset"});
  if (rc.train_name == rc.test_name)
    throw ConfigError("transfer requires distinct train and test dataset names (both are '" + rc.train_name + "')");
  std::vector<std::string> errors;
  if (needs_embeddings(rc)) require_files(rc, {"embeddings"}, errors);
  if (!errors.empty()) throw ConfigError("invalid configuration:\n  " + errors.front());
  auto ws = Workspace::load(rc, needs_embeddings(rc));
  std::unique_ptr<EmbeddingSpace> space;
  if (needs_embeddings(rc)) space = std::make_unique<EmbeddingSpace>(ws->table, ws->store, rc.embedding);
  const bool paths = rc.decider == DeciderKind::PathAnalogy;
  GoldDataset train = load_dataset(*rc.train_dataset, rc.train_name, space.get(), ws->store, paths, ctx.err);
  GoldDataset test = load_dataset(*rc.test_dataset, rc.test_name, space.get(), ws->store, paths, ctx.err);
  auto rep = transfer_run(train, test, ws->store, make_factory(rc, *ws, space.get()), rc.seed, rc.eval);
  const std::string model = model_label(rc, "");
  std::ostringstream table;
  table << "model: " << model << " (" << rc.train_name << " -> " << rc.test_name << ")\nP "
        << percent(rep.metrics.precision) << "  R " << percent(rep.metrics.recall) << "  F1 " << percent(rep.metrics.f1)
        << "  ACC " << percent(rep.metrics.accuracy) << '\n';
  write_reports(ctx, metrics_row("transfer", model, rep.metrics), table.str(),
                rep.seen_unseen ? seen_unseen_row("transfer", model, *rep.seen_unseen) : "");
  return kSuccess;
}

/// Writes a small clustered toy world plus a ready-to-run config.
inline int cmd_synth(CommandContext& ctx, std::uint64_t seed) {
  SyntheticOptions so;
  so.seed = seed;
  auto w = make_synthetic_world(so);
  util::write_file_atomic(ctx.output / "triples.tsv", w.triples);
  util::write_file_atomic(ctx.output / "embeddings.txt", w.embeddings);
  util::write_file_atomic(ctx.output / "gold.tsv", w.gold);
  util::write_file_atomic(ctx.output / "run.conf",
                          "[paths]\ntriples = triples.tsv\nembeddings = embeddings.txt\ndataset = gold.tsv\n\n"
                          "[run]\nseed = " + std::to_string(seed) +
                              "\ndecider = path_analogy\n\n[model]\nn1 = 4\nn2 = 2\npath_length = 3\n"
                              "learning_rate = 0.01\nepochs = 50\n\n[analogy]\nconfiguration = C1\nM = 10\nN = 20\n"
                              "padding = between\n");
  ctx.out << "seeds\t" << w.dataset.seeds().size() << "\npairs\t" << w.dataset.pairs.size() << "\nentities\t"
          << w.store.entity_count() << '\n';
  return kSuccess;
}

/// Parses arguments and dispatches to a subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Seed-driven knowledge graph bootstrapping with analogy-based pruning"};
  app.require_subcommand(1);
  std::optional<std::filesystem::path> config_path, output;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "run configuration file");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "RNG seed (overrides run.seed)");
    sub->add_option("--output", output, "output directory")->required();
    sub->add_option("--set", overrides, "override a config key: section.key=value");
  };
  std::optional<std::filesystem::path> triples, degrees;
  auto* ingest = app.add_subcommand("ingest", "index a triple file and write a store snapshot");
  common(ingest, false);
  ingest->add_option("--triples", triples, "TAB-separated triple file");
  ingest->add_option("--degrees", degrees, "entity TAB degree sidecar");
  auto* train = app.add_subcommand("train", "train the analogy classifier");
  common(train, true);
  std::vector<std::string> seeds;
  auto* expand = app.add_subcommand("expand", "expand seeds downward with the configured decider");
  common(expand, true);
  expand->add_option("--seeds", seeds, "seed entities")->delimiter(',');
  auto* evaluate = app.add_subcommand("evaluate", "score a trained or rule decider against gold pairs");
  common(evaluate, true);
  auto* cv = app.add_subcommand("cv", "5-fold cross-validation over seed entities");
  common(cv, true);
  auto* transfer = app.add_subcommand("transfer", "train on one dataset, test on another");
  common(transfer, true);
  auto* synth = app.add_subcommand("synth", "write a synthetic demo world");
  common(synth, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
  }

  try {
    Config config = config_path ? Config::load(*config_path) : Config{};
    for (const auto& o : overrides) config.set_override(o);
    if (seed) config.set("run.seed", std::to_string(*seed));
    CommandContext ctx{std::move(config), *output, out, err};
    if (*ingest) return cmd_ingest(ctx, triples, degrees);
    if (*train) return cmd_train(ctx);
    if (*expand) return cmd_expand(ctx, seeds);
    if (*evaluate) return cmd_evaluate(ctx);
    if (*cv) return cmd_cv(ctx);
    if (*transfer) return cmd_transfer(ctx);
    if (*synth) return cmd_synth(ctx, seed.value_or(7));
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace kgprune::cli
