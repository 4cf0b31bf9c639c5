#include "ctxf/config.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "ctxf/io.hpp"

namespace ctxf::config {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* kind) {
  throw std::invalid_argument("config: key '" + key + "' has value '" + value +
                              "', expected " + kind);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value': '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " has an empty key");
    for (char ch : key)
      if (std::isspace(static_cast<unsigned char>(ch)))
        throw std::invalid_argument("config: key '" + key + "' on line " +
                                    std::to_string(line_no) +
                                    " contains whitespace");
    if (c.kv_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key +
                                  "' on line " + std::to_string(line_no));
    c.kv_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  return parse(io::read_text_file(path));
}

std::string Config::get(const std::string& key,
                        const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw std::invalid_argument("config: required key '" + key +
                                "' is missing");
  return it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an integer");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "an integer");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "an integer");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "a number");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "a number");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "a number");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean (true/false)");
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size() || it->second[0] == '-')
      bad_value(key, it->second, "an unsigned integer");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "an unsigned integer");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "an unsigned integer");
  }
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::string& fallback) const {
  const std::string value = get(key, fallback);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

}  // namespace ctxf::config
