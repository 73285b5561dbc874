#pragma once

#include <map>
#include <string>
#include <vector>

namespace torusmix::config {

// Flat key=value text with `include <path>` lines; later keys win.
struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  std::string get(const std::string& key, const std::string& dflt = "") const;
  long get_int(const std::string& key, long dflt) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  std::string render() const;  // canonical text form, sorted keys
};

Config parse(const std::string& text, const std::string& base_dir = ".");
Config load(const std::string& path);

}  // namespace torusmix::config
