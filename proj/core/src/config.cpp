#include "cbct/config.hpp"

#include <climits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cbct/arrays.hpp"

namespace cbct {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg[section];  // record empty sections too
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg[section][key] = value;
  }
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& raw,
                            const char* want) {
  throw std::invalid_argument("config key '" + key + "': expected " + want + ", got '" +
                              raw + "'");
}

}  // namespace

double get_double(const ConfigSection& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) throw std::invalid_argument("missing config key '" + key + "'");
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "a number");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "a number");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "a representable number");
  }
}

double get_double_or(const ConfigSection& s, const std::string& key, double fallback) {
  return s.count(key) ? get_double(s, key) : fallback;
}

int get_int(const ConfigSection& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) throw std::invalid_argument("missing config key '" + key + "'");
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size() || v < INT_MIN || v > INT_MAX)
      bad_value(key, it->second, "an integer");
    return static_cast<int>(v);
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "an integer");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "a representable integer");
  }
}

int get_int_or(const ConfigSection& s, const std::string& key, int fallback) {
  return s.count(key) ? get_int(s, key) : fallback;
}

std::uint64_t get_u64_or(const ConfigSection& s, const std::string& key,
                         std::uint64_t fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an unsigned integer");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, it->second, "an unsigned integer");
  } catch (const std::out_of_range&) {
    bad_value(key, it->second, "a representable unsigned integer");
  }
}

bool get_bool_or(const ConfigSection& s, const std::string& key, bool fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::string get_string_or(const ConfigSection& s, const std::string& key,
                          const std::string& fallback) {
  const auto it = s.find(key);
  return it == s.end() ? fallback : it->second;
}

}  // namespace cbct
