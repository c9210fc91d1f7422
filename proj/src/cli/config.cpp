#include <fstream>
#include <sstream>

#include "pilotwave/cli.hpp"
#include "pilotwave/error.hpp"

namespace pilotwave::cli {

namespace {

bool same_kind(const Json& like, const Json& v) {
  if (like.is_number()) {
    if (!v.is_number()) return false;
    // integers stay integers
    if (like.is_number_integer()) return v.is_number_integer();
    return true;
  }
  if (like.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!e.is_number()) return false;
    return true;
  }
  return like.type() == v.type();
}

std::string kind_name(const Json& like) {
  if (like.is_number_integer()) return "an integer";
  if (like.is_number()) return "a number";
  if (like.is_boolean()) return "a boolean";
  if (like.is_array()) return "a list of numbers";
  return "a string";
}

}  // namespace

Json RunConfig::to_json(bool with_seed, bool with_n) const {
  Json j = {{"experiment", experiment}, {"threads", threads}, {"params", params}};
  if (with_seed) j["seed"] = seed;
  if (with_n) j["n"] = n;
  return j;
}

RunConfig parse_config(const Command& cmd, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.experiment = cmd.name;
  c.seed = cmd.default_seed;
  c.n = cmd.default_n;
  for (const auto& p : cmd.params) c.params[p.name] = p.value;

  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") {
      if (!v.is_string() || v.get<std::string>() != cmd.name)
        throw ConfigError("config is for experiment " + v.dump() + ", not " + cmd.name);
    } else if (key == "seed" && cmd.uses_seed) {
      if (!v.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "n" && cmd.uses_n) {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) throw ConfigError("n must be a positive integer");
      c.n = v.get<std::size_t>();
    } else if (key == "threads") {
      if (!v.is_number_unsigned()) throw ConfigError("threads must be a non-negative integer");
      c.threads = v.get<unsigned>();
    } else if (key == "params") {
      if (!v.is_object()) throw ConfigError("params must be an object");
      for (const auto& [name, value] : v.items()) {
        if (!c.params.contains(name)) throw ConfigError("unknown parameter '" + name + "' for " + cmd.name);
        if (!same_kind(c.params[name], value))
          throw ConfigError("parameter '" + name + "' must be " + kind_name(c.params[name]));
        c.params[name] = value;
      }
    } else {
      throw ConfigError("unknown config key '" + key + "' for " + cmd.name);
    }
  }
  return c;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json parse_value(const Json& like, const std::string& text, const std::string& name) {
  auto bad = [&] { return ConfigError("--" + name + " expects " + kind_name(like) + ", got '" + text + "'"); };
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != s.size()) throw bad();
    return v;
  };
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw bad();
  }
  if (like.is_number_integer()) {
    const double v = number(text);
    if (v != static_cast<double>(static_cast<long long>(v))) throw bad();
    if (like.is_number_unsigned() && v < 0) throw bad();
    return like.is_number_unsigned() ? Json(static_cast<std::uint64_t>(v)) : Json(static_cast<long long>(v));
  }
  if (like.is_number()) return number(text);
  if (like.is_array()) {
    Json out = Json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
    if (out.empty()) throw bad();
    return out;
  }
  return text;
}

}  // namespace pilotwave::cli
