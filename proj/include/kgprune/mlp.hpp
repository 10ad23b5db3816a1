#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kgprune/convnet.hpp"
#include "kgprune/embeddings.hpp"

namespace kgprune {

enum class Concatenation { Horizontal, Translation };

/// Feed-forward baseline: dense ReLU hidden layers with dropout, sigmoid output.
struct MlpConfig {
  std::vector<std::size_t> hidden{200, 100, 50};
  Concatenation concatenation = Concatenation::Horizontal;
  std::size_t dim = 200;  // embedding dimension
  double dropout = 0.0;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return concatenation == Concatenation::Horizontal ? 2 * dim : dim; }

  void validate() const {
    for (auto h : hidden)
      if (h == 0) throw ConfigError("hidden layer widths must be positive");
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }
};

inline std::vector<std::size_t> mlp_widths(const MlpConfig& c) {
  std::vector<std::size_t> w{c.input_size()};
  w.insert(w.end(), c.hidden.begin(), c.hidden.end());
  w.push_back(1);
  return w;
}

inline std::size_t parameter_count(const MlpConfig& c) {
  auto w = mlp_widths(c);
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) n += w[i] * w[i + 1] + w[i + 1];
  return n;
}

/// Flat storage: per layer, weights [out][in] then biases [out].
struct MlpParams {
  MlpConfig config;
  std::vector<double> values;
};

inline MlpParams init_params(const MlpConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  MlpParams p{cfg, std::vector<double>(parameter_count(cfg), 0.0)};
  auto w = mlp_widths(cfg);
  std::size_t off = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w[i])));
    for (std::size_t k = 0; k < w[i] * w[i + 1]; ++k) p.values[off + k] = dist(rng);
    off += w[i] * w[i + 1] + w[i + 1];
  }
  return p;
}

/// Pair features: [seed; reached] or reached - seed.
inline Vector mlp_input(const Vector& seed, const Vector& reached, Concatenation c) {
  if (c == Concatenation::Horizontal) {
    Vector x(seed);
    x.insert(x.end(), reached.begin(), reached.end());
    return x;
  }
  Vector x(reached.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = reached[i] - seed[i];
  return x;
}

struct MlpCache {
  std::vector<std::vector<double>> z, h, mask;  // per hidden layer
  double logit = 0, score = 0;
};

inline MlpCache mlp_forward(const MlpParams& p, const Vector& x, std::mt19937_64* rng) {
  auto w = mlp_widths(p.config);
  if (x.size() != w.front())
    throw DataError("MLP input has " + std::to_string(x.size()) + " values, expected " + std::to_string(w.front()));
  const bool drop = rng != nullptr && p.config.dropout > 0.0;
  MlpCache k;
  std::span<const double> in = x;
  std::size_t off = 0;
  for (std::size_t layer = 0; layer + 1 < w.size(); ++layer) {
    const std::size_t n_in = w[layer], n_out = w[layer + 1];
    const double* W = &p.values[off];
    const double* b = &p.values[off + n_in * n_out];
    std::vector<double> z(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < n_in; ++i) s += W[o * n_in + i] * in[i];
      z[o] = s;
    }
    off += n_in * n_out + n_out;
    if (layer + 2 == w.size()) {
      k.logit = z[0];
      k.score = detail::sigmoid(z[0]);
      break;
    }
    std::vector<double> mask(n_out, 1.0);
    if (drop) detail::dropout_mask(mask, p.config.dropout, rng);
    std::vector<double> h(n_out);
    for (std::size_t o = 0; o < n_out; ++o) h[o] = std::max(0.0, z[o]) * mask[o];
    k.z.push_back(std::move(z));
    k.mask.push_back(std::move(mask));
    k.h.push_back(std::move(h));
    in = k.h.back();
  }
  return k;
}

inline double score(const MlpParams& p, const Vector& x) { return mlp_forward(p, x, nullptr).score; }

inline double accumulate_example(const MlpParams& p, const Vector& x, double label, double weight, double scale,
                                 std::mt19937_64* rng, std::span<double> grad) {
  auto k = mlp_forward(p, x, rng);
  auto w = mlp_widths(p.config);
  const std::size_t layers = w.size() - 1;
  std::vector<std::size_t> offs(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offs[l] = off;
    off += w[l] * w[l + 1] + w[l + 1];
  }
  std::vector<double> delta{weight * (k.score - label) * scale};  // d loss / d z of current layer
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n_in = w[l], n_out = w[l + 1];
    std::span<const double> in = l == 0 ? std::span<const double>(x) : std::span<const double>(k.h[l - 1]);
    const std::size_t W = offs[l], b = offs[l] + n_in * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      grad[b + o] += delta[o];
      for (std::size_t i = 0; i < n_in; ++i) grad[W + o * n_in + i] += delta[o] * in[i];
    }
    if (l == 0) break;
    std::vector<double> prev(n_in, 0.0);
    for (std::size_t i = 0; i < n_in; ++i) {
      if (k.z[l - 1][i] <= 0.0) continue;
      double s = 0;
      for (std::size_t o = 0; o < n_out; ++o) s += p.values[W + o * n_in + i] * delta[o];
      prev[i] = s * k.mask[l - 1][i];
    }
    delta = std::move(prev);
  }
  return weight * binary_cross_entropy(k.score, label);
}

inline double predict(const MlpParams& p, const Vector& x, std::size_t samples, std::mt19937_64& rng) {
  if (p.config.dropout <= 0.0) return score(p, x);
  if (samples == 0) throw ConfigError("MC dropout sample count must be >= 1");
  double sum = 0;
  for (std::size_t t = 0; t < samples; ++t) sum += mlp_forward(p, x, &rng).score;
  return sum / static_cast<double>(samples);
}

}  // namespace kgprune
