#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "heis/suites.hpp"

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2, kNumerical = 3;

std::string suite_list() {
  std::string s;
  for (auto& n : heis::suite_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

void write_outputs(const heis::Report& rep, const std::string& dir, int code) {
  std::filesystem::create_directories(dir);
  heis::write_text(dir + "/report.csv", heis::report_csv(rep));
  heis::write_text(dir + "/summary.json", heis::report_summary_json(rep, code));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification suites for bi-parameter analysis on products of Heisenberg groups"};
  std::string suite, config_path, out;
  std::uint64_t seed = 0;
  int threads = -1;
  app.add_option("suite", suite, "suite: " + suite_list())->required();
  app.add_option("--config", config_path, "key=value configuration file")->required();
  auto* out_opt = app.add_option("--out", out, "output directory (report.csv, summary.json)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (unsigned 64-bit)");
  auto* thr_opt = app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (!heis::is_suite(suite)) {
    std::cerr << "unknown suite '" << suite << "'; expected one of: " << suite_list() << "\n";
    return kUsage;
  }

  heis::Config cfg;
  try {
    cfg = heis::Config::load(config_path, heis::default_config());
    cfg.apply_env();
    if (*seed_opt) cfg.set("run.seed", std::to_string(seed));
    if (*thr_opt) cfg.set("run.threads", std::to_string(threads));
    if (*out_opt) cfg.set("run.out", out);
    cfg.u64("run.seed");
    long long t = cfg.integer("run.threads");
    if (t < 0) throw heis::config_error("run.threads must be >= 0");
    heis::set_threads(static_cast<int>(t));
  } catch (const heis::input_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  }
  const std::string dir = cfg.str("run.out");

  heis::Report rep;
  rep.suite = suite;
  rep.config_hash = cfg.hash();
  int code = kPass;
  try {
    std::filesystem::create_directories(dir);
    rep = heis::run_suite(suite, cfg);
    code = rep.all_pass() ? kPass : kFail;
  } catch (const heis::numerical_error& e) {
    rep.numerical_failure = true;
    rep.diagnostics.push_back(std::string("numerical error: ") + e.what());
    code = kNumerical;
  } catch (const heis::input_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    rep.diagnostics.push_back(std::string("config error: ") + e.what());
    code = kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    rep.diagnostics.push_back(std::string("error: ") + e.what());
    code = kNumerical;
  }
  try {
    write_outputs(rep, dir, code);
  } catch (const std::exception& e) {
    std::cerr << "cannot write report: " << e.what() << "\n";
    return code == kPass ? kFail : code;
  }
  for (auto& c : rep.checks)
    std::printf("%-4s %s value=%s bound=%s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), heis::fmt17(c.value).c_str(),
                heis::fmt17(c.bound).c_str());
  for (auto& d : rep.diagnostics) std::printf("note %s\n", d.c_str());
  std::printf("%s: %zu checks, %zu failed, exit %d\n", suite.c_str(), rep.checks.size(), rep.failed(), code);
  return code;
}
