#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "heis/grid_io.hpp"
#include "heis/suites.hpp"
#include "json.hpp"

using namespace heis;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in, default_config());
}

GridFunction sample_grid(bool complex_values, bool masked) {
  Axis s{-1.5, 2.0, 5}, x{-0.5, 0.25, 4}, y{0.0, 1.0, 3};
  auto u = GridFunction::sample(FactorGrid(1, s, {x, y}), [&](const GroupPoint& g) {
    return cplx(std::sin(g.s) + g.x(0) * 1e-300, complex_values ? g.x(1) - 0.1 : 0.0);
  });
  if (masked) u.valid[7] = 0;
  return u;
}

}  // namespace

TEST_CASE("config parsing", "[cli]") {
  Config c = parse("# comment\n  group.samples = 17  # trailing\n\nrun.seed=9\n");
  CHECK(c.integer("group.samples") == 17);
  CHECK(c.u64("run.seed") == 9);
  CHECK(c.real("group.tol") == 1e-12);
  CHECK(c.reals("czk.gammas") == std::vector<double>{2, 4, 8, 16});
  CHECK_FALSE(c.flag("report.record_timing"));
  CHECK_THROWS_AS(parse("no.such.key = 1\n"), config_error);
  CHECK_THROWS_AS(parse("group.samples\n"), config_error);
  CHECK_THROWS_AS(parse(" = 3\n"), config_error);
  CHECK_THROWS_AS(parse("group.samples = 1x\n").integer("group.samples"), config_error);
  CHECK_THROWS_AS(parse("run.seed = -1\n").u64("run.seed"), config_error);
  CHECK_THROWS_AS(parse("group.tol = abc\n").real("group.tol"), config_error);
  CHECK_THROWS_AS(parse("atom.save = maybe\n").flag("atom.save"), config_error);
  CHECK_THROWS_AS(parse("group.tol = -1\n").positive("group.tol"), config_error);
  CHECK_THROWS_AS(Config::load("/nonexistent/x.conf", default_config()), config_error);
}

TEST_CASE("environment overrides", "[cli]") {
  CHECK(Config::env_name("journe.max_rects") == "SZL_JOURNE_MAX_RECTS");
  Config c = default_config();
  ::setenv("SZL_JOURNE_MAX_RECTS", " 12 ", 1);
  c.apply_env();
  ::unsetenv("SZL_JOURNE_MAX_RECTS");
  CHECK(c.integer("journe.max_rects") == 12);
}

TEST_CASE("config hash", "[cli]") {
  Config a = default_config(), b = default_config();
  CHECK(a.hash() == b.hash());
  b.set("run.out", "elsewhere");
  b.set("run.threads", "7");
  CHECK(a.hash() == b.hash());
  b.set("run.seed", "2");
  CHECK(a.hash() != b.hash());
  // FNV-1a 64 of the empty string
  CHECK(Config().hash() == 14695981039346656037ull);
  // reparsing the canonical form is a fixed point
  CHECK(parse(a.canonical()).hash() == a.hash());
}

TEST_CASE("report formatting", "[cli]") {
  Report r;
  r.suite = "demo";
  r.at_most("a,b", 0.1, 1.0 / 3.0);
  r.at_least("nan", std::nan(""), 0.0);
  r.add("inf", INFINITY, 1, true);
  CHECK(r.failed() == 1);
  CHECK_FALSE(r.all_pass());
  std::string csv = report_csv(r);
  CHECK(csv ==
        "suite,check,value,bound,pass,seconds\n"
        "demo,\"a,b\",0.10000000000000001,0.33333333333333331,true,0\n"
        "demo,nan,nan,0,false,0\n"
        "demo,inf,inf,1,true,0\n");
  CHECK(std::stod(fmt17(0.1)) == 0.1);
  r.config_hash = 0xabcull;
  r.diagnostics.push_back("line\n\"two\"");
  std::string js = report_summary_json(r, 1);
  CHECK(std::count(js.begin(), js.end(), '\n') == 1);
  auto j = nlohmann::json::parse(js);
  CHECK(j["suite"] == "demo");
  CHECK(j["failed"] == 1);
  CHECK(j["exit_code"] == 1);
  CHECK(j["config_hash"] == "0000000000000abc");
  CHECK(j["diagnostics"][0] == "line\n\"two\"");
}

TEST_CASE("grid round trip is bit exact", "[cli]") {
  for (bool cx : {false, true})
    for (bool mk : {false, true}) {
      GridFunction u = sample_grid(cx, mk);
      auto bytes = encode_grid(u);
      CHECK(bytes[0] == 'H');
      CHECK(bytes[3] == 'F');
      CHECK(bytes[4] == 1);
      CHECK(bytes[8] == 3);
      CHECK(bytes[12] == 5);
      CHECK(bytes[36] == ((cx ? 1 : 0) | 2 | (mk ? 4 : 0)));
      GridFunction v = decode_grid(bytes);
      REQUIRE(v.values.size() == u.values.size());
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        CHECK(std::bit_cast<std::uint64_t>(v.values[i].real()) == std::bit_cast<std::uint64_t>(u.values[i].real()));
        CHECK(std::bit_cast<std::uint64_t>(v.values[i].imag()) == std::bit_cast<std::uint64_t>(u.values[i].imag()));
      }
      CHECK(v.valid == u.valid);
      CHECK(v.grid.s.min == -1.5);
      CHECK(v.grid.x[0].steps == 4);
      CHECK(encode_grid(v) == bytes);
    }
}

TEST_CASE("grid decoding rejects malformed input", "[cli]") {
  auto bytes = encode_grid(sample_grid(true, true));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_grid(bad), format_error);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_grid(bad), format_error);
  bad = bytes;
  bad[8] = 4;
  CHECK_THROWS_AS(decode_grid(bad), format_error);
  bad = bytes;
  bad[36] |= 8;
  CHECK_THROWS_AS(decode_grid(bad), format_error);
  for (std::size_t cut : {std::size_t(2), std::size_t(20), bytes.size() - 1}) {
    bad.assign(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(decode_grid(bad), format_error);
  }
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_grid(bad), format_error);
}

TEST_CASE("grid files on disk", "[cli]") {
  auto dir = std::filesystem::temp_directory_path() / "heis_grid_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "g.bin").string();
  GridFunction u = sample_grid(false, false);
  save_grid(path, u);
  CHECK(std::filesystem::file_size(path) == encode_grid(u).size());
  CHECK(load_grid(path).values == u.values);
  CHECK_THROWS_AS(load_grid((dir / "missing.bin").string()), format_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite dispatch", "[cli]") {
  Config c = default_config();
  CHECK(suite_names().size() == 9);
  CHECK(is_suite("group-selftest"));
  CHECK_FALSE(is_suite("nope"));
  CHECK_THROWS_AS(run_suite("nope", c), config_error);
  Report a = run_suite("group-selftest", c), b = run_suite("group-selftest", c);
  CHECK(a.all_pass());
  CHECK(report_csv(a) == report_csv(b));
  CHECK(a.config_hash == c.hash());
  for (auto& ch : a.checks) CHECK(ch.seconds == 0.0);
  c.set("report.record_timing", "true");
  Report t = run_suite("group-selftest", c);
  CHECK(t.checks.size() == a.checks.size());
  c.set("group.samples", "0");
  CHECK_THROWS_AS(run_suite("group-selftest", c), input_error);
}
