#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pilotwave/cli.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/rng.hpp"

using namespace pilotwave::cli;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "pilotwave");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_command(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pilotwave_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config schema") {
  const auto& sg = find_command("stern-gerlach");
  const auto c = parse_config(sg, Json::object());
  CHECK(c.seed == sg.default_seed);
  CHECK(c.n == sg.default_n);
  CHECK(c.params["alpha2"] == 0.7);
  CHECK(c.params.size() == sg.params.size());

  const auto d = parse_config(sg, Json::parse(R"({"experiment": "stern-gerlach", "seed": 3, "n": 50, "params": {"alpha2": 1, "readout": "spin"}})"));
  CHECK(d.seed == 3);
  CHECK(d.n == 50);
  CHECK(d.params["alpha2"] == 1);
  // round trip through the file form
  const auto e = parse_config(sg, d.to_json(true, true));
  CHECK(e.to_json(true, true) == d.to_json(true, true));

  CHECK_THROWS_AS(parse_config(sg, Json::parse(R"({"sed": 3})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_config(sg, Json::parse(R"({"params": {"alpha": 0.5}})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_config(sg, Json::parse(R"({"params": {"alpha2": "half"}})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_config(sg, Json::parse(R"({"experiment": "bell"})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_config(sg, Json::parse(R"({"n": 0})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_config(sg, Json::parse("[1, 2]")), pilotwave::ConfigError);
  // bell has no trials, so n is not part of its schema
  CHECK_THROWS_AS(parse_config(find_command("bell"), Json::parse(R"({"n": 10})")), pilotwave::ConfigError);
  CHECK_THROWS_AS(find_command("nope"), pilotwave::ConfigError);
}

TEST_CASE("command-line values take the type of the default") {
  CHECK(parse_value(Json(0.5), "1e-3", "x") == 1e-3);
  CHECK(parse_value(Json(16), "32", "x") == 32);
  CHECK(parse_value(Json(true), "false", "x") == false);
  CHECK(parse_value(Json("sign"), "spin", "x") == "spin");
  CHECK(parse_value(Json::array({1.0}), "0.5,1,2", "x") == Json::array({0.5, 1.0, 2.0}));
  CHECK_THROWS_AS(parse_value(Json(16), "2.5", "x"), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_value(Json(0.5), "0.5x", "x"), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_value(Json(true), "maybe", "x"), pilotwave::ConfigError);
  CHECK_THROWS_AS(parse_value(Json(std::uint64_t{1}), "-1", "x"), pilotwave::ConfigError);
}

TEST_CASE("number formatting reads back exactly") {
  pilotwave::Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.uniform() * 40) - 20);
    CHECK(std::strtod(fmt(v).c_str(), nullptr) == v);
  }
  CHECK(fmt(0.25) == "0.25");
  CHECK(fmt(1.0) == "1");
}

TEST_CASE("CSV quoting and widths") {
  Report r;
  r.columns = {"a", "b"};
  r.add_row({"x,y", "say \"hi\""});
  CHECK(to_csv(r) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  r.add_row({"1"});
  CHECK_THROWS(to_csv(r));
}

TEST_CASE("run_command: eigenstate, files and determinism") {
  const auto one = scratch("sg1"), two = scratch("sg2");
  CHECK(run({"stern-gerlach", "--alpha2", "1.0", "--n", "100", "--out", one.string(), "--threads", "1"}) == kPass);
  CHECK(run({"stern-gerlach", "--alpha2", "1.0", "--n", "100", "--out", two.string(), "--threads", "2"}) == kPass);
  const auto csv = slurp(one / "stern-gerlach.csv");
  CHECK(lines(csv) == 101);
  CHECK(csv == slurp(two / "stern-gerlach.csv"));

  auto a = Json::parse(slurp(one / "stern-gerlach.json"));
  auto b = Json::parse(slurp(two / "stern-gerlach.json"));
  CHECK(a["results"]["frequency_plus"] == 1.0);
  CHECK(a["passed"] == true);
  CHECK(a["version"] == kVersion);
  CHECK(a["seed"] == find_command("stern-gerlach").default_seed);
  CHECK(a["config"]["params"]["alpha2"] == 1.0);
  for (auto* j : {&a, &b}) {
    j->erase("timestamp");
    j->erase("wall_time_s");
    (*j)["config"].erase("threads");
  }
  CHECK(a == b);
}

TEST_CASE("run_command: config files and flags") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "sg.json") << R"({"experiment": "stern-gerlach", "n": 40, "params": {"alpha2": 0.0}})";
    std::ofstream(dir / "bad.json") << R"({"experiment": "stern-gerlach", "params": {"colour": 1}})";
    std::ofstream(dir / "broken.json") << "{";
  }
  CHECK(run({"stern-gerlach", "--config", (dir / "sg.json").string(), "--out", dir.string()}) == kPass);
  CHECK(lines(slurp(dir / "stern-gerlach.csv")) == 41);
  // flags override the file
  CHECK(run({"stern-gerlach", "--config", (dir / "sg.json").string(), "--n", "7", "--out", dir.string()}) == kPass);
  CHECK(lines(slurp(dir / "stern-gerlach.csv")) == 8);

  CHECK(run({"stern-gerlach", "--config", (dir / "bad.json").string(), "--out", dir.string()}) == kConfigError);
  CHECK(run({"stern-gerlach", "--config", (dir / "broken.json").string(), "--out", dir.string()}) == kConfigError);
  CHECK(run({"stern-gerlach", "--config", (dir / "missing.json").string(), "--out", dir.string()}) == kConfigError);
  CHECK(run({"stern-gerlach", "--colour", "1"}) == kConfigError);
  CHECK(run({"stern-gerlach", "--alpha2", "1.5", "--out", dir.string()}) == kConfigError);
  CHECK(run({"equivariance", "--scenario", "lake", "--out", dir.string()}) == kConfigError);
  CHECK(run({}) == kConfigError);
  CHECK(run({"--help"}) == kPass);
}

TEST_CASE("run_command: exit codes for failed checks and guards") {
  const auto dir = scratch("codes");
  CHECK(run({"stern-gerlach", "--n", "20", "--tolerance", "-1", "--out", dir.string()}) == kAssertionFailed);
  CHECK(Json::parse(slurp(dir / "stern-gerlach.json"))["passed"] == false);
  // a box far too small for a 50-unit flight trips the wrap-around guard
  CHECK(run({"time-of-flight", "--half-width", "10", "--points", "256", "--n", "10", "--out", dir.string()}) == kNumericalGuard);
}

TEST_CASE("run_command: bell summary") {
  const auto dir = scratch("bell");
  CHECK(run({"bell", "--angles", "120", "--out", dir.string()}) == kPass);
  const auto j = Json::parse(slurp(dir / "bell.json"));
  CHECK(std::abs(j["results"]["lhs"].get<double>() - 0.75) < 1e-12);
  CHECK(j["results"]["bound"] == 1.0);
  CHECK(j["results"]["violated"] == true);
  CHECK(j["results"]["certificate"]["feasible"] == false);
  CHECK(lines(slurp(dir / "bell.csv")) == 1 + 9 * 4);
}

TEST_CASE("help text names every subcommand") {
  CHECK(commands().size() == 10);
  for (const auto& c : commands()) {
    CHECK_FALSE(c.description.empty());
    CHECK_FALSE(c.csv_columns.empty());
    CHECK(c.execute);
  }
}
