#include "torusmix/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace torusmix::config {

std::string Config::get(const std::string& key, const std::string& dflt) const {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

long Config::get_int(const std::string& key, long dflt) const {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stol(it->second);
}

double Config::get_double(const std::string& key, double dflt) const {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stod(it->second);
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

std::string Config::render() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  return os.str();
}

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void parse_into(Config& cfg, const std::string& text,
                const std::string& base_dir, int depth) {
  if (depth > 8) throw std::runtime_error("config: include depth exceeded");
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("include ", 0) == 0) {
      std::filesystem::path p = strip(line.substr(8));
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      std::ifstream f(p);
      if (!f) throw std::runtime_error("config: cannot include " + p.string());
      std::string sub((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
      parse_into(cfg, sub, p.parent_path().string(), depth + 1);
      continue;
    }
    auto pos = line.find('=');
    if (pos == std::string::npos)
      throw std::runtime_error("config: expected key=value, got: " + line);
    cfg.kv[strip(line.substr(0, pos))] = strip(line.substr(pos + 1));
  }
}

}  // namespace

Config parse(const std::string& text, const std::string& base_dir) {
  Config cfg;
  parse_into(cfg, text, base_dir, 0);
  return cfg;
}

Config load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse(text, std::filesystem::path(path).parent_path().string());
}

}  // namespace torusmix::config
