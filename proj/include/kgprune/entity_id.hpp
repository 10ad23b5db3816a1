#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

#include "kgprune/error.hpp"

namespace kgprune {

/// Opaque entity identifier. Wikidata QIDs ("Q<digits>") order numerically,
/// other tokens lexicographically after every QID.
class EntityId {
 public:
  explicit EntityId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw DataError("empty entity identifier");
    qid_ = id_.size() > 1 && id_[0] == 'Q' &&
           id_.find_first_not_of("0123456789", 1) == std::string::npos;
  }
  explicit EntityId(std::string_view id) : EntityId(std::string(id)) {}
  explicit EntityId(const char* id) : EntityId(std::string(id)) {}

  const std::string& str() const noexcept { return id_; }
  bool is_qid() const noexcept { return qid_; }

  friend bool operator==(const EntityId& a, const EntityId& b) noexcept { return a.id_ == b.id_; }

  friend std::strong_ordering operator<=>(const EntityId& a, const EntityId& b) noexcept {
    if (a.qid_ != b.qid_) return a.qid_ ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.qid_) {
      std::string_view da = digits(a.id_), db = digits(b.id_);
      if (da.size() != db.size()) return da.size() <=> db.size();
      if (auto c = da.compare(db); c != 0) return c <=> 0;
    }
    return a.id_.compare(b.id_) <=> 0;
  }

  friend std::ostream& operator<<(std::ostream& os, const EntityId& e) { return os << e.id_; }

 private:
  // Numeric part without leading zeros.
  static std::string_view digits(const std::string& s) noexcept {
    std::string_view d(s);
    d.remove_prefix(1);
    while (d.size() > 1 && d.front() == '0') d.remove_prefix(1);
    return d;
  }

  std::string id_;
  bool qid_ = false;
};

}  // namespace kgprune

template <>
struct std::hash<kgprune::EntityId> {
  std::size_t operator()(const kgprune::EntityId& e) const noexcept {
    return std::hash<std::string>{}(e.str());
  }
};
