#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

/// Command-line runner: JSON configs in, JSON summary and CSV detail out.
namespace pilotwave::cli {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes of run_command.
enum ExitCode : int { kPass = 0, kAssertionFailed = 1, kConfigError = 2, kNumericalGuard = 3 };

struct RunConfig {
  std::string experiment;
  /// Every parameter of the command, defaults filled in.
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::size_t n = 0;
  unsigned threads = 0;
  std::string out = ".";

  /// The config file form: {experiment, seed?, n?, threads, params}.
  Json to_json(bool with_seed, bool with_n) const;
};

/// A named tolerance check. `relation` is "<=", ">=" or "==" (booleans).
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;
  bool passed = false;
};

Check check_le(std::string name, double value, double bound);
Check check_ge(std::string name, double value, double bound);
Check check_true(std::string name, bool value);

struct Report {
  Json results = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool passed() const;
  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// Shortest decimal form that reads back to the same double.
std::string fmt(double v);

struct Param {
  std::string name;
  /// The default; its JSON type is the type every override must have.
  Json value;
  std::string help;
};

struct Command {
  std::string name;
  std::string description;
  bool uses_seed = false;
  bool uses_n = false;
  std::uint64_t default_seed = 0;
  std::size_t default_n = 0;
  std::vector<Param> params;
  std::string csv_columns;  // documented in --help
  std::function<Report(const RunConfig&)> execute;
};

const std::vector<Command>& commands();
/// Throws ConfigError for an unknown name.
const Command& find_command(const std::string& name);

/// Schema check of a config object for `cmd`, defaults filled in. Unknown
/// keys, wrong types and a mismatching "experiment" throw ConfigError.
RunConfig parse_config(const Command& cmd, const Json& j);
Json load_json(const std::string& path);

/// Parses a command-line override into the JSON type of `like`:
/// numbers, booleans, strings, or comma-separated number lists.
Json parse_value(const Json& like, const std::string& text, const std::string& name);

/// Writes <out>/<command>.json (config echo, seed, version, results,
/// checks, wall time, timestamp) and <out>/<command>.csv.
void emit_report(const Command& cmd, const RunConfig& cfg, const Report& r, double wall_seconds);
Json summary_json(const Command& cmd, const RunConfig& cfg, const Report& r, double wall_seconds);
std::string to_csv(const Report& r);

/// Parses argv, runs one subcommand and returns an ExitCode.
int run_command(int argc, char** argv);

}  // namespace pilotwave::cli
