#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kgprune/util.hpp"

namespace kgprune {

/// Flat key-value configuration with `[section]` headers. Keys are stored as
/// "section.key". A value containing commas is a grid of alternatives.
class Config {
 public:
  static Config parse(std::string_view text) {
    Config c;
    std::string section;
    std::size_t lineno = 0;
    for (auto raw : util::split(text, '\n')) {
      ++lineno;
      auto line = util::trim(util::chomp(raw));
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError("unterminated section header", lineno);
        section = std::string(util::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
      auto key = std::string(util::trim(line.substr(0, eq)));
      if (key.empty()) throw ParseError("empty key", lineno);
      c.values_[section.empty() ? key : section + "." + key] = std::string(util::trim(line.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::filesystem::path& p) {
    Config c = parse(util::read_file(p));
    c.base_dir_ = p.parent_path();
    return c;
  }

  /// Applies a `section.key=value` override.
  void set_override(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must be section.key=value");
    set(std::string(util::trim(assignment.substr(0, eq))), std::string(util::trim(assignment.substr(eq + 1))));
  }

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }

  bool has(const std::string& key) const { return get(key).has_value(); }

  /// Relative paths resolve against the config file's directory.
  std::optional<std::filesystem::path> path(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted `key=value` lines; identical configs give identical text.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  std::string digest() const { return util::hex64(util::fnv1a(canonical())); }

  /// Keys whose value lists alternatives.
  std::vector<std::string> grid_keys() const {
    std::vector<std::string> keys;
    for (const auto& [k, v] : values_)
      if (v.find(',') != std::string::npos) keys.push_back(k);
    return keys;
  }

  /// Cartesian product over grid keys, in key order with the last key varying
  /// fastest. Each point is returned with a label like "a.b=1,c.d=x".
  std::vector<std::pair<std::string, Config>> expand_grid() const {
    std::vector<std::pair<std::string, Config>> points{{"", *this}};
    for (const auto& key : grid_keys()) {
      std::vector<std::pair<std::string, Config>> next;
      for (const auto& [label, cfg] : points)
        for (auto alt : util::split(values_.at(key), ',')) {
          Config c = cfg;
          c.values_[key] = std::string(util::trim(alt));
          std::string l = label.empty() ? "" : label + ",";
          next.emplace_back(l + key + "=" + c.values_[key], std::move(c));
        }
      points = std::move(next);
    }
    return points;
  }

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace kgprune
