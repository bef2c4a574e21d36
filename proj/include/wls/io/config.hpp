#pragma once

#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "wls/errors.hpp"
#include "wls/io/matrix_io.hpp"

namespace wls {

// Typed view over a key=value file; parse failures name the offending key.
class ConfigMap {
 public:
  ConfigMap() = default;
  explicit ConfigMap(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}
  static ConfigMap from_file(const std::string& path) { return ConfigMap(read_key_values(path)); }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  const std::map<std::string, std::string>& raw() const { return kv_; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
      throw ConfigError("config key '" + key + "': not an integer: " + it->second);
    return static_cast<int>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& s = it->second;
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + s);
  }

  // Comma- or whitespace-separated list of reals.
  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = kv_.find(key);
    if (it == kv_.end()) return out;
    std::string item;
    for (char c : it->second + ",") {
      if (c == ',' || c == ' ' || c == '\t') {
        if (!item.empty()) out.push_back(parse_double(key, item));
        item.clear();
      } else {
        item += c;
      }
    }
    return out;
  }

 private:
  static double parse_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw ConfigError("config key '" + key + "': not a number: " + s);
    return v;
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace wls
