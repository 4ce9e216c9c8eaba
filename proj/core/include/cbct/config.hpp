#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace cbct {

// Flat INI-style configuration: [section] headers, key = value lines,
// '#' or ';' comments. Sections and keys are case-sensitive.
using ConfigSection = std::map<std::string, std::string>;
using Config = std::map<std::string, ConfigSection>;

Config parse_config(const std::string& text);
Config load_config_file(const std::string& path);

// Typed lookups. The *_or forms return the fallback when the key is absent;
// the required forms throw std::invalid_argument naming the key. Malformed
// values always throw, naming the key.
double get_double(const ConfigSection& s, const std::string& key);
double get_double_or(const ConfigSection& s, const std::string& key, double fallback);
int get_int(const ConfigSection& s, const std::string& key);
int get_int_or(const ConfigSection& s, const std::string& key, int fallback);
std::uint64_t get_u64_or(const ConfigSection& s, const std::string& key, std::uint64_t fallback);
bool get_bool_or(const ConfigSection& s, const std::string& key, bool fallback);
std::string get_string_or(const ConfigSection& s, const std::string& key, const std::string& fallback);

}  // namespace cbct
