#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kgprune/matrix.hpp"
#include "kgprune/util.hpp"

namespace kgprune {

/// Two-convolution analogy classifier hyperparameters.
struct ModelConfig {
  std::size_t n1 = 16;           // conv-1 filters
  std::size_t n2 = 8;            // conv-2 filters
  std::size_t side_length = 2;   // conv-1 kernel width, embeddings per side
  std::size_t dim = 200;         // embedding dimension (input rows)
  double dropout = 0.0;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (n1 == 0 || n2 == 0) throw ConfigError("filter counts must be >= 1");
    if (side_length < 2) throw ConfigError("side length must be >= 2");
    if (dim == 0 || dim % 2 != 0) throw ConfigError("embedding dimension must be even and positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Offsets of each parameter block inside the flat parameter vector:
/// conv1 weights [f][k], conv1 bias [f], conv2 weights [g][a][c][f],
/// conv2 bias [g], fc weights [r * n2 + g], fc bias.
struct ConvLayout {
  std::size_t w1, b1, w2, b2, fc, fc_b, total;

  explicit ConvLayout(const ModelConfig& c) {
    w1 = 0;
    b1 = w1 + c.n1 * c.side_length;
    w2 = b1 + c.n1;
    b2 = w2 + c.n2 * 4 * c.n1;
    fc = b2 + c.n2;
    fc_b = fc + (c.dim / 2) * c.n2;
    total = fc_b + 1;
  }
};

inline std::size_t parameter_count(const ModelConfig& c) {
  return c.n1 * (c.side_length + 1) + c.n2 * (4 * c.n1 + 1) + (c.dim / 2) * c.n2 + 1;
}

struct ModelParams {
  ModelConfig config;
  std::vector<double> values;

  ConvLayout layout() const { return ConvLayout(config); }
};

inline ModelParams zero_params(const ModelConfig& cfg) {
  cfg.validate();
  return {cfg, std::vector<double>(ConvLayout(cfg).total, 0.0)};
}

/// He-normal weights (variance 2 / fan_in), zero biases.
inline ModelParams init_params(const ModelConfig& cfg, std::mt19937_64& rng) {
  ModelParams p = zero_params(cfg);
  const ConvLayout l(cfg);
  auto he = [&](std::size_t begin, std::size_t end, double fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (std::size_t i = begin; i < end; ++i) p.values[i] = dist(rng);
  };
  he(l.w1, l.b1, static_cast<double>(cfg.side_length));
  he(l.w2, l.b2, static_cast<double>(4 * cfg.n1));
  he(l.fc, l.fc_b, static_cast<double>((cfg.dim / 2) * cfg.n2));
  return p;
}

enum class ForwardMode { Deterministic, Train, MCDropout };

/// Activations kept for the backward pass.
struct ConvCache {
  std::vector<double> z1, mask1, h1;  // [i][j][f], i < d, j < 2
  std::vector<double> z2, mask2, h2;  // [r][g], r < d/2
  double logit = 0;
  double score = 0;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Inverted dropout: kept units are scaled by 1 / (1 - p).
inline void dropout_mask(std::vector<double>& mask, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) {
    std::fill(mask.begin(), mask.end(), 1.0);
    return;
  }
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = keep(*rng) ? scale : 0.0;
}

}  // namespace detail

/// Forward pass. `rng` is required for Train and MCDropout modes when dropout > 0.
inline ConvCache forward(const ModelParams& params, const Matrix& x, ForwardMode mode,
                         std::mt19937_64* rng = nullptr) {
  const ModelConfig& c = params.config;
  const std::size_t d = c.dim, L = c.side_length, n1 = c.n1, n2 = c.n2, half = d / 2;
  if (x.rows != d || x.cols != 2 * L)
    throw DataError("input shape " + std::to_string(x.rows) + "x" + std::to_string(x.cols) + " does not match model " +
                    std::to_string(d) + "x" + std::to_string(2 * L));
  if (params.values.size() != ConvLayout(c).total) throw DataError("parameter vector has the wrong size");
  const ConvLayout l(c);
  const double* w = params.values.data();
  const bool stochastic = mode != ForwardMode::Deterministic && c.dropout > 0.0;
  if (stochastic && rng == nullptr) throw Error("dropout forward pass requires an RNG");

  ConvCache k;
  k.z1.assign(d * 2 * n1, 0.0);
  k.h1.assign(d * 2 * n1, 0.0);
  k.mask1.assign(d * 2 * n1, 1.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t f = 0; f < n1; ++f) {
        double z = w[l.b1 + f];
        for (std::size_t t = 0; t < L; ++t) z += w[l.w1 + f * L + t] * x(i, j * L + t);
        k.z1[(i * 2 + j) * n1 + f] = z;
      }
  if (stochastic) detail::dropout_mask(k.mask1, c.dropout, rng);
  for (std::size_t u = 0; u < k.z1.size(); ++u) k.h1[u] = std::max(0.0, k.z1[u]) * k.mask1[u];

  k.z2.assign(half * n2, 0.0);
  k.h2.assign(half * n2, 0.0);
  k.mask2.assign(half * n2, 1.0);
  for (std::size_t r = 0; r < half; ++r)
    for (std::size_t g = 0; g < n2; ++g) {
      double z = w[l.b2 + g];
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t cc = 0; cc < 2; ++cc) {
          const double* h = &k.h1[((2 * r + a) * 2 + cc) * n1];
          const double* wg = &w[l.w2 + ((g * 2 + a) * 2 + cc) * n1];
          for (std::size_t f = 0; f < n1; ++f) z += wg[f] * h[f];
        }
      k.z2[r * n2 + g] = z;
    }
  if (stochastic) detail::dropout_mask(k.mask2, c.dropout, rng);
  for (std::size_t u = 0; u < k.z2.size(); ++u) k.h2[u] = std::max(0.0, k.z2[u]) * k.mask2[u];

  double z = w[l.fc_b];
  for (std::size_t u = 0; u < k.h2.size(); ++u) z += w[l.fc + u] * k.h2[u];
  k.logit = z;
  k.score = detail::sigmoid(z);
  return k;
}

inline double score(const ModelParams& params, const Matrix& x) {
  return forward(params, x, ForwardMode::Deterministic).score;
}

/// Accumulates `dlogit` times d(logit)/d(params) into `grad`.
inline void backward(const ModelParams& params, const Matrix& x, const ConvCache& k, double dlogit,
                     std::span<double> grad) {
  const ModelConfig& c = params.config;
  const std::size_t d = c.dim, L = c.side_length, n1 = c.n1, n2 = c.n2, half = d / 2;
  const ConvLayout l(c);
  const double* w = params.values.data();

  grad[l.fc_b] += dlogit;
  std::vector<double> dz2(half * n2);
  for (std::size_t u = 0; u < k.h2.size(); ++u) {
    grad[l.fc + u] += dlogit * k.h2[u];
    dz2[u] = k.z2[u] > 0.0 ? dlogit * w[l.fc + u] * k.mask2[u] : 0.0;
  }

  std::vector<double> dh1(d * 2 * n1, 0.0);
  for (std::size_t r = 0; r < half; ++r)
    for (std::size_t g = 0; g < n2; ++g) {
      const double gz = dz2[r * n2 + g];
      if (gz == 0.0) continue;
      grad[l.b2 + g] += gz;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t cc = 0; cc < 2; ++cc) {
          const std::size_t hbase = ((2 * r + a) * 2 + cc) * n1;
          const std::size_t wbase = l.w2 + ((g * 2 + a) * 2 + cc) * n1;
          for (std::size_t f = 0; f < n1; ++f) {
            grad[wbase + f] += gz * k.h1[hbase + f];
            dh1[hbase + f] += gz * w[wbase + f];
          }
        }
    }

  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t f = 0; f < n1; ++f) {
        const std::size_t u = (i * 2 + j) * n1 + f;
        if (k.z1[u] <= 0.0) continue;
        const double gz = dh1[u] * k.mask1[u];
        if (gz == 0.0) continue;
        grad[l.b1 + f] += gz;
        for (std::size_t t = 0; t < L; ++t) grad[l.w1 + f * L + t] += gz * x(i, j * L + t);
      }
}

// Scores are clamped to this band before taking logs.
inline constexpr double kScoreEpsilon = 1e-7;

inline double binary_cross_entropy(double s, double label) {
  s = std::clamp(s, kScoreEpsilon, 1.0 - kScoreEpsilon);
  return -(label * std::log(s) + (1.0 - label) * std::log(1.0 - s));
}

struct ClassWeights {
  double valid = 1.0;    // label 1
  double invalid = 1.0;  // label 0

  double of(double label) const { return label > 0.5 ? valid : invalid; }
};

struct LabeledInput {
  Matrix input;
  double label;
};

struct LossAndGrads {
  double loss;
  std::vector<double> grads;
};

/// Class-weighted mean binary cross-entropy over a batch and its gradient.
/// Dropout masks are drawn once per example when `rng` is given.
inline LossAndGrads loss_and_grads(const ModelParams& params, std::span<const LabeledInput> batch,
                                   ClassWeights weights, std::mt19937_64* rng = nullptr) {
  if (batch.empty()) throw DataError("empty batch");
  LossAndGrads out{0.0, std::vector<double>(params.values.size(), 0.0)};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const ForwardMode mode = rng ? ForwardMode::Train : ForwardMode::Deterministic;
  for (const auto& ex : batch) {
    auto k = forward(params, ex.input, mode, rng);
    const double w = weights.of(ex.label);
    out.loss += w * binary_cross_entropy(k.score, ex.label) * inv_b;
    // d/dlogit of -[y log s + (1-y) log(1-s)] is s - y.
    backward(params, ex.input, k, w * (k.score - ex.label) * inv_b, out.grads);
  }
  return out;
}

/// Mean of `samples` dropout-active forward passes when dropout > 0,
/// otherwise a single deterministic pass.
inline double predict(const ModelParams& params, const Matrix& x, std::size_t samples, std::mt19937_64& rng) {
  if (params.config.dropout <= 0.0) return score(params, x);
  if (samples == 0) throw ConfigError("MC dropout sample count must be >= 1");
  double sum = 0;
  for (std::size_t t = 0; t < samples; ++t) sum += forward(params, x, ForwardMode::MCDropout, &rng).score;
  return sum / static_cast<double>(samples);
}

// Checkpoint: "ANET", u32 version, config, u64 count, f64 parameters.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const ModelParams& p) {
  out.write("ANET", 4);
  util::put<std::uint32_t>(out, kCheckpointVersion);
  util::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.config.n1));
  util::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.config.n2));
  util::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.config.side_length));
  util::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.config.dim));
  util::put<double>(out, p.config.dropout);
  util::put<double>(out, p.config.learning_rate);
  util::put<std::uint64_t>(out, p.config.seed);
  util::put<std::uint64_t>(out, p.values.size());
  for (double v : p.values) util::put<double>(out, v);
}

inline ModelParams read_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "ANET") throw ParseError("not a model checkpoint (bad magic)");
  auto version = util::get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig c;
  c.n1 = util::get<std::uint32_t>(in, "n1");
  c.n2 = util::get<std::uint32_t>(in, "n2");
  c.side_length = util::get<std::uint32_t>(in, "side_length");
  c.dim = util::get<std::uint32_t>(in, "dim");
  c.dropout = util::get<double>(in, "dropout");
  c.learning_rate = util::get<double>(in, "learning_rate");
  c.seed = util::get<std::uint64_t>(in, "seed");
  c.validate();
  auto n = util::get<std::uint64_t>(in, "parameter count");
  if (n != parameter_count(c)) throw ParseError("checkpoint parameter count does not match its config");
  ModelParams p{c, std::vector<double>(n)};
  for (auto& v : p.values) v = util::get<double>(in, "parameter");
  return p;
}

inline std::string checkpoint_summary(const ModelParams& p, double best_val_loss) {
  std::ostringstream s;
  s << "n1\t" << p.config.n1 << "\nn2\t" << p.config.n2 << "\nside_length\t" << p.config.side_length << "\ndim\t"
    << p.config.dim << "\ndropout\t" << p.config.dropout << "\nlearning_rate\t" << p.config.learning_rate
    << "\nseed\t" << p.config.seed << "\nparameter_count\t" << parameter_count(p.config) << "\nbest_val_loss\t"
    << util::format_double(best_val_loss, 9) << '\n';
  return s.str();
}

}  // namespace kgprune
