#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace casunext {

/// Flat "dotted.key = value" text files: one entry per line, '#' comments,
/// nesting expressed through the dotted key paths. Used for run configs and
/// checkpoint manifests.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_string(const std::string& text);

  bool has(const std::string& key) const;

  void set(const std::string& key, std::string value);
  void set_int(const std::string& key, long long v);
  void set_uint(const std::string& key, std::uint64_t v);
  void set_double(const std::string& key, double v);
  void set_bool(const std::string& key, bool v);
  void set_ints(const std::string& key, const std::vector<int>& v);

  std::string get_string(const std::string& key, const std::string& def) const;
  long long get_int(const std::string& key, long long def) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<int> get_ints(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  const std::string* find(const std::string& key) const;
  // insertion order preserved; later set() of an existing key overwrites
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace casunext
