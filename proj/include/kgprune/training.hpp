#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "kgprune/convnet.hpp"

namespace kgprune {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments, shaped like the parameter vector they update.
class Adam {
 public:
  Adam(AdamConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
      params[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

/// Patience 5 for 50 epochs, 20 for 200; otherwise a tenth of the epochs.
inline std::size_t default_patience(std::size_t epochs) {
  if (epochs == 50) return 5;
  if (epochs == 200) return 20;
  return std::max<std::size_t>(1, epochs / 10);
}

/// Tracks the best validation loss; signals a stop after `patience`
/// consecutive epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop.
  bool update(std::size_t epoch, double val_loss) {
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_epoch_ = epoch;
      since_improvement_ = 0;
      return false;
    }
    return ++since_improvement_ >= patience_;
  }

  bool improved_at(std::size_t epoch) const { return best_epoch_ == epoch; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  std::size_t epochs_since_improvement() const { return since_improvement_; }

 private:
  std::size_t patience_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t since_improvement_ = 0;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t patience = 0;  // 0: default_patience(epochs)
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double train_loss;
  std::optional<double> val_loss;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  bool stopped_early = false;
};

template <class Params>
struct TrainResult {
  Params params;
  TrainHistory history;
};

/// w_c = total / (2 * count_c) over binary labels.
template <class Source>
ClassWeights balanced_class_weights(const Source& data) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < data.size(); ++i) pos += data[i].label > 0.5;
  const std::size_t neg = data.size() - pos;
  const double total = static_cast<double>(data.size());
  ClassWeights w;
  w.valid = pos ? total / (2.0 * static_cast<double>(pos)) : 0.0;
  w.invalid = neg ? total / (2.0 * static_cast<double>(neg)) : 0.0;
  return w;
}

// Per-network hooks used by fit():
//   double accumulate_example(const P&, const Input&, double label, double weight,
//                             double scale, std::mt19937_64*, std::span<double> grad)
//   double score(const P&, const Input&)
inline double accumulate_example(const ModelParams& p, const Matrix& x, double label, double weight, double scale,
                                 std::mt19937_64* rng, std::span<double> grad) {
  auto k = forward(p, x, rng ? ForwardMode::Train : ForwardMode::Deterministic, rng);
  backward(p, x, k, weight * (k.score - label) * scale, grad);
  return weight * binary_cross_entropy(k.score, label);
}

/// Unweighted mean binary cross-entropy with dropout disabled.
template <class Params, class Source>
double mean_loss(const Params& p, const Source& data) {
  double s = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    s += binary_cross_entropy(score(p, ex.input), ex.label);
  }
  return data.size() ? s / static_cast<double>(data.size()) : 0.0;
}

template <class Params, class Source>
double accuracy(const Params& p, const Source& data) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    ok += (score(p, ex.input) > 0.5) == (ex.label > 0.5);
  }
  return data.size() ? static_cast<double>(ok) / static_cast<double>(data.size()) : 0.0;
}

/// Mini-batch Adam on class-weighted BCE with early stopping on validation
/// loss. Returns the parameters of the best validation epoch (the last epoch
/// when `val` is empty). A Source exposes size() and operator[] yielding
/// {input, label}.
template <class Params, class Source>
TrainResult<Params> fit(Params params, const Source& train, const Source& val, TrainOptions opt) {
  if (train.size() == 0) throw DataError("cannot train on an empty training set");
  if (opt.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (opt.epochs == 0) throw ConfigError("epochs must be >= 1");
  const std::size_t patience = opt.patience ? opt.patience : default_patience(opt.epochs);
  const ClassWeights weights = balanced_class_weights(train);
  const bool uses_dropout = params.config.dropout > 0.0;

  std::mt19937_64 rng(opt.seed);
  Adam adam(opt.adam, params.values.size());
  EarlyStopping stopper(patience);
  TrainResult<Params> out{params, {}};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.values.size());

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train[order[b]];
        batch_loss += accumulate_example(params, ex.input, ex.label, weights.of(ex.label), scale,
                                         uses_dropout ? &rng : nullptr, grad);
      }
      adam.step(params.values, grad);
      epoch_loss += batch_loss * scale;
      ++batches;
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(batches), std::nullopt};
    if (val.size() > 0) {
      rec.val_loss = mean_loss(params, val);
      const bool stop = stopper.update(epoch, *rec.val_loss);
      if (stopper.improved_at(epoch)) out.params = params;
      out.history.epochs.push_back(rec);
      if (stop) {
        out.history.stopped_early = true;
        break;
      }
    } else {
      out.history.epochs.push_back(rec);
      out.params = params;
    }
  }
  if (val.size() > 0) {
    out.history.best_epoch = stopper.best_epoch();
    out.history.best_val_loss = stopper.best_loss();
  } else {
    out.history.best_epoch = out.history.epochs.back().epoch;
  }
  return out;
}

/// Model training entry point.
template <class Source>
TrainResult<ModelParams> train(const ModelConfig& cfg, const Source& train_set, const Source& val_set,
                               std::size_t epochs = 50, std::size_t batch_size = 32, std::size_t patience = 0) {
  cfg.validate();
  std::mt19937_64 init_rng(util::derive_seed(cfg.seed, 1));
  TrainOptions opt;
  opt.epochs = epochs;
  opt.batch_size = batch_size;
  opt.patience = patience;
  opt.adam.learning_rate = cfg.learning_rate;
  opt.seed = util::derive_seed(cfg.seed, 2);
  return fit(init_params(cfg, init_rng), train_set, val_set, opt);
}

}  // namespace kgprune
