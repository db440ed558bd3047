#pragma once

#include <map>
#include <string>
#include <vector>

namespace cpsw {

// Flat `key = value` configuration file. Lines starting with '#' (or blank)
// are skipped. Keys use dotted sections, e.g. `stage1.capacity = 1250`.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long def) const;

  // Keys with the given prefix, in file order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace cpsw
