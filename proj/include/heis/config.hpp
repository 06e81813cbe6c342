#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "group.hpp"

namespace heis {

struct config_error : input_error {
  using input_error::input_error;
};

// flat key=value configuration; keys are namespaced with dots (grid.s_steps)
class Config {
 public:
  Config() = default;
  explicit Config(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  // known keys come from the defaults; unknown keys in a file are rejected
  static Config parse(std::istream& in, const Config& defaults, const std::string& origin = "config") {
    Config c = defaults;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw config_error(origin + ":" + std::to_string(ln) + ": expected key=value");
      std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
      if (k.empty()) throw config_error(origin + ":" + std::to_string(ln) + ": empty key");
      if (!defaults.has(k)) throw config_error(origin + ":" + std::to_string(ln) + ": unknown key '" + k + "'");
      c.kv_[k] = v;
    }
    return c;
  }
  static Config load(const std::string& path, const Config& defaults) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file '" + path + "'");
    return parse(f, defaults, path);
  }

  // SZL_GRID_S_STEPS overrides grid.s_steps
  static std::string env_name(const std::string& key) {
    std::string e = "SZL_";
    for (char ch : key) e += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return e;
  }
  void apply_env() {
    for (auto& [k, v] : kv_)
      if (const char* e = std::getenv(env_name(k).c_str())) v = trim(e);
  }

  bool has(const std::string& k) const { return kv_.count(k) > 0; }
  void set(const std::string& k, const std::string& v) { kv_[k] = v; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  const std::string& str(const std::string& k) const {
    auto it = kv_.find(k);
    if (it == kv_.end()) throw config_error("missing config key '" + k + "'");
    return it->second;
  }
  double real(const std::string& k) const { return to_real(k, str(k)); }
  long long integer(const std::string& k) const {
    const std::string& v = str(k);
    std::size_t pos = 0;
    long long r = 0;
    try {
      r = std::stoll(v, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw config_error("key '" + k + "': not an integer: '" + v + "'");
    return r;
  }
  std::uint64_t u64(const std::string& k) const {
    const std::string& v = str(k);
    std::size_t pos = 0;
    unsigned long long r = 0;
    try {
      if (!v.empty() && v[0] != '-') r = std::stoull(v, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw config_error("key '" + k + "': not an unsigned integer: '" + v + "'");
    return r;
  }
  bool flag(const std::string& k) const {
    const std::string& v = str(k);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("key '" + k + "': not a boolean: '" + v + "'");
  }
  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(k, trim(item)));
    if (out.empty()) throw config_error("key '" + k + "': empty list");
    return out;
  }
  double positive(const std::string& k) const {
    double v = real(k);
    if (!(v > 0)) throw config_error("key '" + k + "': must be > 0");
    return v;
  }

  // sorted key=value lines; hashing skips keys that cannot change results
  std::string canonical() const {
    std::string s;
    for (auto& [k, v] : kv_) {
      if (k == "run.out" || k == "run.threads") continue;
      s += k + "=" + v + "\n";
    }
    return s;
  }
  std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  static double to_real(const std::string& k, const std::string& v) {
    std::size_t pos = 0;
    double r = 0;
    try {
      r = std::stod(v, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw config_error("key '" + k + "': not a number: '" + v + "'");
    return r;
  }
  std::map<std::string, std::string> kv_;
};

}  // namespace heis
