#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cea::config {

// Flat key-value config with [section] headers, '#' comments and
// 'key = value' lines. Values are stored as strings and converted by the
// typed getters; lists are comma-separated.
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<std::uint64_t> get_uint_list(const std::string& section,
                                           const std::string& key) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace cea::config
