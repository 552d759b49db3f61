#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flexquad/errors.hpp"

namespace flexquad {

// Flat key = value configuration text. '#' starts a comment, blank lines are
// ignored, keys may be dotted (section.key). Every consumer declares the keys
// it understands; unconsumed keys are a fatal ConfigError so typos cannot
// silently change an experiment.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  uint64_t get_seed(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  // Comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& key) const;

  // Keys present with the given dotted prefix ("section.").
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  // Throws ConfigError naming every key that was never read.
  void check_all_consumed() const;

  // Canonical "key = value" text with keys sorted; used for resolved-config
  // copies in run directories.
  std::string canonical_text() const;

  void set(const std::string& key, const std::string& value);
  const std::string& origin() const { return origin_; }

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
  std::string origin_;
};

}  // namespace flexquad
