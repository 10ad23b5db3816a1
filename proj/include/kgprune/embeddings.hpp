#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgprune/kg_store.hpp"
#include "kgprune/pairs.hpp"

namespace kgprune {

using Vector = std::vector<double>;

enum class EmbeddingKind { E1, E2 };
enum class ProximityMetric { Cosine, Euclidean };
enum class EmbeddingFormat { Text, Binary };

/// Entity -> fixed-length float vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  void insert(const EntityId& e, std::vector<float> v) {
    if (dim_ == 0) {
      if (v.empty()) throw DataError("zero-length embedding for " + e.str());
      dim_ = v.size();
    }
    if (v.size() != dim_)
      throw DataError("embedding for " + e.str() + " has " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(dim_));
    for (float x : v)
      if (!std::isfinite(x)) throw DataError("non-finite embedding value for " + e.str());
    vectors_[e] = std::move(v);
  }

  const std::vector<float>* find(const EntityId& e) const {
    auto it = vectors_.find(e);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  bool contains(const EntityId& e) const { return vectors_.count(e) != 0; }

  /// Entities in EntityId order.
  std::vector<EntityId> sorted_ids() const {
    std::vector<EntityId> ids;
    ids.reserve(vectors_.size());
    for (const auto& kv : vectors_) ids.push_back(kv.first);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<EntityId, std::vector<float>> vectors_;
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};

inline EmbeddingTable read_embeddings_text(std::istream& in) {
  EmbeddingTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = util::chomp(line);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split_ws(l);
    if (f.size() < 2) throw ParseError("embedding line needs an id and at least one value", lineno);
    std::vector<float> v;
    v.reserve(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i) v.push_back(static_cast<float>(util::parse_double(f[i], lineno)));
    try {
      t.insert(EntityId(f[0]), std::move(v));
    } catch (const DataError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return t;
}

inline EmbeddingTable read_embeddings_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kEmbeddingMagic))
    throw ParseError("bad embedding magic (expected EMB1)");
  auto dim = util::get<std::uint32_t>(in, "dim");
  auto count = util::get<std::uint64_t>(in, "count");
  if (dim == 0) throw ParseError("embedding dim is zero");
  EmbeddingTable t(dim);
  std::string id;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = util::get<std::uint16_t>(in, "id length");
    id.resize(len);
    in.read(id.data(), len);
    if (in.gcount() != len) throw ParseError("truncated entity id in record " + std::to_string(i));
    std::vector<float> v(dim);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(dim * sizeof(float)))
      throw ParseError("truncated vector for " + id);
    t.insert(EntityId(id), std::move(v));
  }
  return t;
}

inline EmbeddingTable load_embeddings(std::istream& in, EmbeddingFormat format) {
  return format == EmbeddingFormat::Text ? read_embeddings_text(in) : read_embeddings_binary(in);
}

/// Records are written in EntityId order.
inline void write_embeddings_binary(std::ostream& out, const EmbeddingTable& t) {
  out.write(kEmbeddingMagic, 4);
  util::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
  util::put<std::uint64_t>(out, t.size());
  for (const auto& id : t.sorted_ids()) {
    if (id.str().size() > UINT16_MAX) throw DataError("entity id too long: " + id.str());
    util::put<std::uint16_t>(out, static_cast<std::uint16_t>(id.str().size()));
    out.write(id.str().data(), static_cast<std::streamsize>(id.str().size()));
    const auto& v = *t.find(id);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
}

inline void write_embeddings_text(std::ostream& out, const EmbeddingTable& t) {
  char buf[32];
  for (const auto& id : t.sorted_ids()) {
    out << id;
    for (float x : *t.find(id)) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
      out << buf;
    }
    out << '\n';
  }
}

inline Vector to_vector(const std::vector<float>& v) { return Vector(v.begin(), v.end()); }

/// E1: raw vector. E2: centroid of the embedded instances of `e`, falling back
/// to E1 when no instance has a vector.
inline std::optional<Vector> entity_vector(const EmbeddingTable& table, const KGStore& store,
                                           const EntityId& e, EmbeddingKind kind) {
  if (kind == EmbeddingKind::E2) {
    Vector sum(table.dim(), 0.0);
    std::size_t n = 0;
    for (const auto& inst : store.instances(e)) {
      if (const auto* v = table.find(inst)) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
        ++n;
      }
    }
    if (n > 0) {
      for (double& x : sum) x /= static_cast<double>(n);
      return sum;
    }
  }
  if (const auto* v = table.find(e)) return to_vector(*v);
  return std::nullopt;
}

/// Resolves entity vectors of one kind over a table and store.
class EmbeddingSpace {
 public:
  EmbeddingSpace(const EmbeddingTable& table, const KGStore& store, EmbeddingKind kind = EmbeddingKind::E1)
      : table_(&table), store_(&store), kind_(kind) {}

  std::size_t dim() const { return table_->dim(); }
  EmbeddingKind kind() const { return kind_; }

  std::optional<Vector> find(const EntityId& e) const {
    if (auto it = cache_.find(e); it != cache_.end()) return it->second;
    return entity_vector(*table_, *store_, e, kind_);
  }

  bool contains(const EntityId& e) const {
    if (kind_ == EmbeddingKind::E1) return table_->contains(e);
    return cache_.count(e) != 0 || find(e).has_value();
  }

  Vector at(const EntityId& e) const {
    auto v = find(e);
    if (!v) throw DataError("no embedding for entity " + e.str());
    return std::move(*v);
  }

  /// Memoizes E2 centroids for `ids`. Call before sharing across threads.
  template <class Range>
  void precompute(const Range& ids) {
    if (kind_ != EmbeddingKind::E2) return;
    for (const auto& e : ids)
      if (!cache_.count(e))
        if (auto v = entity_vector(*table_, *store_, e, kind_)) cache_.emplace(e, std::move(*v));
  }

 private:
  const EmbeddingTable* table_;
  const KGStore* store_;
  EmbeddingKind kind_;
  std::unordered_map<EntityId, Vector> cache_;
};

inline double proximity(std::span<const double> a, std::span<const double> b, ProximityMetric metric) {
  if (a.size() != b.size()) throw DataError("proximity between vectors of different length");
  if (metric == ProximityMetric::Euclidean) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double d = a[i] - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 1.0;
  // sqrt(aa)*sqrt(bb) keeps self-similarity exactly 1.
  double cos = ab / (std::sqrt(aa) * std::sqrt(bb));
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

inline double proximity(const EmbeddingSpace& space, const EntityId& a, const EntityId& b, ProximityMetric metric) {
  return proximity(space.at(a), space.at(b), metric);
}

enum class SameSeedPolicy { Allow, Exclude };

/// Pairs of the wanted decision ordered by proximity of their seed to
/// `query_seed` (ties: seed id, then reached id); at most `n` returned.
inline std::vector<LabeledPair> nearest_labeled_pairs(const EmbeddingSpace& space, const EntityId& query_seed,
                                                      std::span<const LabeledPair> pool, Decision wanted,
                                                      std::size_t n, ProximityMetric metric,
                                                      SameSeedPolicy same_seed = SameSeedPolicy::Allow) {
  if (n == 0 || pool.empty()) return {};
  const Vector q = space.at(query_seed);
  std::unordered_map<EntityId, double> seed_distance;
  struct Candidate {
    double dist;
    const LabeledPair* pair;
  };
  std::vector<Candidate> cands;
  for (const auto& p : pool) {
    if (p.decision != wanted) continue;
    if (same_seed == SameSeedPolicy::Exclude && p.seed == query_seed) continue;
    auto it = seed_distance.find(p.seed);
    if (it == seed_distance.end()) it = seed_distance.emplace(p.seed, proximity(q, space.at(p.seed), metric)).first;
    cands.push_back({it->second, &p});
  }
  auto less = [](const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.pair->seed != b.pair->seed) return a.pair->seed < b.pair->seed;
    return a.pair->reached < b.pair->reached;
  };
  const std::size_t k = std::min(n, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), less);
  std::vector<LabeledPair> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(*cands[i].pair);
  return out;
}

}  // namespace kgprune
