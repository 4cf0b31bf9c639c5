#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Flat, line-oriented experiment configuration: one "section.key = value"
// entry per line, '#' starts a comment, blank lines are ignored. There are
// no nested structures; section membership is just a naming convention
// inside the key.
namespace ctxf::config {

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  // Raw accessors. require() throws when the key is absent.
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;

  // Typed accessors; a present key that fails to parse is an error.
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  // Comma-separated list, each element trimmed; empty value -> empty list.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::string& fallback) const;

  // Overrides or inserts a value (command-line flags beat file entries).
  void set(const std::string& key, const std::string& value);

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace ctxf::config
