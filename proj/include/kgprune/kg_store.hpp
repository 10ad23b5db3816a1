#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "kgprune/entity_id.hpp"
#include "kgprune/util.hpp"

namespace kgprune {

using EntitySet = std::set<EntityId>;

enum class Direction { Upward, Downward };

inline constexpr std::string_view kInstanceOf = "P31";
inline constexpr std::string_view kSubclassOf = "P279";

/// Hierarchy-bearing subset of a generic KG: P31 and P279 edges with both
/// directions of P279 indexed, plus per-entity statement degrees.
/// Immutable once built.
class KGStore {
 public:
  const EntitySet& superclasses(const EntityId& e) const { return lookup(forward_subclass_, e); }
  const EntitySet& subclasses(const EntityId& e) const { return lookup(reverse_subclass_, e); }
  const EntitySet& instance_of(const EntityId& e) const { return lookup(instance_of_, e); }
  /// Entities f with a P31 edge f -> e.
  const EntitySet& instances(const EntityId& e) const { return lookup(instances_, e); }

  std::uint64_t node_degree(const EntityId& e) const {
    auto it = degree_.find(e);
    return it == degree_.end() ? 0 : it->second;
  }

  bool contains(const EntityId& e) const { return degree_.count(e) != 0; }

  std::size_t entity_count() const { return degree_.size(); }
  std::size_t triple_count() const { return triple_count_; }
  std::size_t hierarchy_edge_count() const { return hierarchy_edges_; }

  const std::map<EntityId, EntitySet>& forward_subclass_index() const { return forward_subclass_; }
  const std::map<EntityId, EntitySet>& reverse_subclass_index() const { return reverse_subclass_; }
  const std::map<EntityId, EntitySet>& instance_of_index() const { return instance_of_; }
  const std::map<EntityId, std::uint64_t>& degrees() const { return degree_; }

  friend bool operator==(const KGStore&, const KGStore&) = default;

 private:
  friend class KGStoreBuilder;

  static const EntitySet& lookup(const std::map<EntityId, EntitySet>& m, const EntityId& e) {
    static const EntitySet empty;
    auto it = m.find(e);
    return it == m.end() ? empty : it->second;
  }

  std::map<EntityId, EntitySet> forward_subclass_;
  std::map<EntityId, EntitySet> reverse_subclass_;
  std::map<EntityId, EntitySet> instance_of_;
  std::map<EntityId, EntitySet> instances_;
  std::map<EntityId, std::uint64_t> degree_;
  std::size_t triple_count_ = 0;
  std::size_t hierarchy_edges_ = 0;
};

/// Incremental builder; duplicate triples are ignored.
class KGStoreBuilder {
 public:
  KGStoreBuilder() = default;
  /// Continue from an existing store (duplicate tracking restarts empty).
  explicit KGStoreBuilder(KGStore base) : store_(std::move(base)) {}

  /// Returns false when the triple was already present.
  bool add(const EntityId& s, std::string_view predicate, const EntityId& o) {
    if (!seen_.insert(s.str() + '\t' + std::string(predicate) + '\t' + o.str()).second) return false;
    ++store_.degree_[s];
    ++store_.degree_[o];
    ++store_.triple_count_;
    if (predicate == kSubclassOf) {
      store_.forward_subclass_[s].insert(o);
      store_.reverse_subclass_[o].insert(s);
      ++store_.hierarchy_edges_;
    } else if (predicate == kInstanceOf) {
      store_.instance_of_[s].insert(o);
      store_.instances_[o].insert(s);
      ++store_.hierarchy_edges_;
    }
    return true;
  }

  void set_degree(const EntityId& e, std::uint64_t d) { store_.degree_[e] = d; }
  void set_triple_count(std::size_t n) { store_.triple_count_ = n; }

  KGStore build() && { return std::move(store_); }

 private:
  KGStore store_;
  std::unordered_set<std::string> seen_;
};

/// Reads `subject TAB predicate TAB object` lines; blank lines and `#`
/// comments are skipped.
inline KGStore ingest_triples(std::istream& in) {
  KGStoreBuilder b;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = util::chomp(line);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split(l, '\t');
    if (f.size() != 3) throw ParseError("expected 3 TAB-separated fields, got " + std::to_string(f.size()), lineno);
    for (auto& x : f) x = util::trim(x);
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError("empty field", lineno);
    b.add(EntityId(f[0]), f[1], EntityId(f[2]));
  }
  return std::move(b).build();
}

inline KGStore ingest_triples(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ingest_triples(in);
}

/// Overrides computed degrees with an `entity TAB degree` sidecar.
inline KGStore apply_degree_sidecar(KGStore store, std::istream& in) {
  KGStoreBuilder b(std::move(store));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = util::chomp(line);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split(l, '\t');
    if (f.size() != 2) throw ParseError("degree sidecar expects 2 TAB-separated fields", lineno);
    b.set_degree(EntityId(util::trim(f[0])), util::parse_u64(f[1], lineno));
  }
  return std::move(b).build();
}

/// First-level classes of `e`: P31 and P279 targets, plus P279 sources when
/// expanding downward. `e` itself is never included.
inline EntitySet first_level_classes(const KGStore& store, const EntityId& e, Direction d) {
  EntitySet out = store.instance_of(e);
  const auto& up = store.superclasses(e);
  out.insert(up.begin(), up.end());
  if (d == Direction::Downward) {
    const auto& down = store.subclasses(e);
    out.insert(down.begin(), down.end());
  }
  out.erase(e);
  return out;
}

inline const EntitySet& subclasses(const KGStore& s, const EntityId& e) { return s.subclasses(e); }
inline const EntitySet& superclasses(const KGStore& s, const EntityId& e) { return s.superclasses(e); }
inline std::uint64_t node_degree(const KGStore& s, const EntityId& e) { return s.node_degree(e); }

// Snapshot: a canonical text dump that reloads to an equal store.
inline constexpr std::string_view kSnapshotHeader = "# kgprune-store v1";

inline std::string write_snapshot(const KGStore& store) {
  std::ostringstream out;
  out << kSnapshotHeader << '\n';
  for (const auto& [s, targets] : store.instance_of_index())
    for (const auto& o : targets) out << "E\t" << s << '\t' << kInstanceOf << '\t' << o << '\n';
  for (const auto& [s, targets] : store.forward_subclass_index())
    for (const auto& o : targets) out << "E\t" << s << '\t' << kSubclassOf << '\t' << o << '\n';
  out << "T\t" << store.triple_count() << '\n';
  for (const auto& [e, d] : store.degrees()) out << "D\t" << e << '\t' << d << '\n';
  return out.str();
}

inline bool is_snapshot(std::string_view text) { return text.substr(0, kSnapshotHeader.size()) == kSnapshotHeader; }

inline KGStore read_snapshot(std::string_view text) {
  if (!is_snapshot(text)) throw ParseError("not a store snapshot");
  KGStoreBuilder b;
  std::size_t lineno = 0;
  std::optional<std::size_t> triples;
  std::vector<std::pair<EntityId, std::uint64_t>> degrees;
  for (auto raw : util::split(text, '\n')) {
    ++lineno;
    auto l = util::chomp(raw);
    if (util::is_blank_or_comment(l)) continue;
    auto f = util::split(l, '\t');
    if (f[0] == "E" && f.size() == 4) {
      b.add(EntityId(f[1]), f[2], EntityId(f[3]));
    } else if (f[0] == "T" && f.size() == 2) {
      triples = util::parse_u64(f[1], lineno);
    } else if (f[0] == "D" && f.size() == 3) {
      degrees.emplace_back(EntityId(f[1]), util::parse_u64(f[2], lineno));
    } else {
      throw ParseError("bad snapshot record", lineno);
    }
  }
  for (const auto& [e, d] : degrees) b.set_degree(e, d);
  if (triples) b.set_triple_count(*triples);
  return std::move(b).build();
}

/// Loads either a raw triple file or a snapshot written by write_snapshot.
inline KGStore load_store(const std::filesystem::path& path) {
  auto text = util::read_file(path);
  if (is_snapshot(text)) return read_snapshot(text);
  return ingest_triples(text);
}

}  // namespace kgprune
