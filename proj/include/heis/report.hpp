#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "group.hpp"

namespace heis {

struct CheckRecord {
  std::string name;
  double value = 0;
  double bound = 0;
  bool pass = false;
  double seconds = 0;
};

struct Report {
  std::string suite;
  std::vector<CheckRecord> checks;
  std::vector<std::string> diagnostics;
  std::uint64_t config_hash = 0;
  double seconds = 0;
  bool numerical_failure = false;

  void add(std::string name, double value, double bound, bool pass, double secs = 0) {
    checks.push_back({std::move(name), value, bound, pass, secs});
  }
  // value <= bound
  void at_most(std::string name, double value, double bound, double secs = 0) {
    add(std::move(name), value, bound, std::isfinite(value) && value <= bound, secs);
  }
  void at_least(std::string name, double value, double bound, double secs = 0) {
    add(std::move(name), value, bound, std::isfinite(value) && value >= bound, secs);
  }
  std::size_t failed() const {
    std::size_t k = 0;
    for (auto& c : checks) k += !c.pass;
    return k;
  }
  bool all_pass() const { return failed() == 0 && !numerical_failure; }
};

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string report_csv(const Report& r) {
  std::string out = "suite,check,value,bound,pass,seconds\n";
  for (auto& c : r.checks)
    out += csv_field(r.suite) + "," + csv_field(c.name) + "," + fmt17(c.value) + "," + fmt17(c.bound) + "," +
           (c.pass ? "true" : "false") + "," + fmt17(c.seconds) + "\n";
  return out;
}

inline std::string json_string(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    switch (c) {
      case '"': o += "\\\""; break;
      case '\\': o += "\\\\"; break;
      case '\n': o += "\\n"; break;
      case '\t': o += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char b[8];
          std::snprintf(b, sizeof b, "\\u%04x", c);
          o += b;
        } else {
          o += c;
        }
    }
  }
  return o + "\"";
}

// one line
inline std::string report_summary_json(const Report& r, int exit_code) {
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  std::string o = "{\"suite\":" + json_string(r.suite) + ",\"checks\":" + std::to_string(r.checks.size()) +
                  ",\"failed\":" + std::to_string(r.failed()) + ",\"pass\":" + (r.all_pass() ? "true" : "false") +
                  ",\"exit_code\":" + std::to_string(exit_code) + ",\"config_hash\":\"" + hash + "\",\"diagnostics\":[";
  for (std::size_t i = 0; i < r.diagnostics.size(); ++i) o += (i ? "," : "") + json_string(r.diagnostics[i]);
  return o + "]}\n";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace heis
