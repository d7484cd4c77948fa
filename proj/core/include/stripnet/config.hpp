#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stripnet::config {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat `section.key = value` configuration. Lines are `key = value` pairs,
// `#` starts a comment, blank lines are skipped, the last assignment of a
// key wins. Typed getters throw ConfigError naming the key (and the source
// line for parse errors).
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated list, items trimmed, empty items rejected.
  std::vector<std::string> get_list(const std::string& key) const;

  // Keys beginning with prefix, in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

private:
  std::string describe(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_ = "<empty>";
};

}  // namespace stripnet::config
