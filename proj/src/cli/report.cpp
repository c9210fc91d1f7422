#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "pilotwave/cli.hpp"
#include "pilotwave/error.hpp"

namespace pilotwave::cli {

Check check_le(std::string name, double value, double bound) {
  return {std::move(name), value, bound, "<=", value <= bound};
}

Check check_ge(std::string name, double value, double bound) {
  return {std::move(name), value, bound, ">=", value >= bound};
}

Check check_true(std::string name, bool value) { return {std::move(name), value ? 1.0 : 0.0, 1.0, "==", value}; }

bool Report::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

std::string to_csv(const Report& r) {
  std::string s;
  for (std::size_t i = 0; i < r.columns.size(); ++i) s += (i ? "," : "") + csv_field(r.columns[i]);
  s += "\n";
  for (const auto& row : r.rows) {
    if (row.size() != r.columns.size()) throw Error("CSV row width differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + csv_field(row[i]);
    s += "\n";
  }
  return s;
}

Json summary_json(const Command& cmd, const RunConfig& cfg, const Report& r, double wall_seconds) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"bound", c.bound}, {"passed", c.passed}});
  Json j = {{"command", cmd.name},
            {"version", kVersion},
            {"config", cfg.to_json(cmd.uses_seed, cmd.uses_n)},
            {"results", r.results},
            {"checks", checks},
            {"passed", r.passed()},
            {"wall_time_s", wall_seconds},
            {"timestamp", utc_now()}};
  if (cmd.uses_seed) j["seed"] = cfg.seed;
  return j;
}

void emit_report(const Command& cmd, const RunConfig& cfg, const Report& r, double wall_seconds) {
  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / (cmd.name + ".json"), summary_json(cmd, cfg, r, wall_seconds).dump(2) + "\n");
  write_file(dir / (cmd.name + ".csv"), to_csv(r));
}

}  // namespace pilotwave::cli
