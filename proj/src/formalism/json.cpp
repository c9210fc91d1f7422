#include "pilotwave/formalism_json.hpp"

namespace pilotwave::formalism {

using nlohmann::json;

namespace {

json encode(const std::vector<Outcome>& outcomes, std::size_t dim, const char* mode) {
  json out = {{"dim", dim}, {"mode", mode}, {"outcomes", json::array()}};
  for (const auto& o : outcomes) {
    json matrix = json::array();
    for (Eigen::Index r = 0; r < o.op.rows(); ++r)
      for (Eigen::Index c = 0; c < o.op.cols(); ++c) matrix.push_back({o.op(r, c).real(), o.op(r, c).imag()});
    out["outcomes"].push_back({{"label", o.label}, {"matrix", std::move(matrix)}});
  }
  return out;
}

std::vector<Outcome> decode(const json& j, std::string& mode) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    mode = j.at("mode").get<std::string>();
    if (dim == 0) throw ValidationError("dim must be positive");
    std::vector<Outcome> out;
    for (const auto& o : j.at("outcomes")) {
      const auto& entries = o.at("matrix");
      if (entries.size() != dim * dim) throw ValidationError("matrix has " + std::to_string(entries.size()) + " entries, expected dim^2");
      CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        if (!e.is_array() || e.size() != 2) throw ValidationError("matrix entries must be [re, im] pairs");
        m(static_cast<Eigen::Index>(k / dim), static_cast<Eigen::Index>(k % dim)) = Complex(e[0].get<double>(), e[1].get<double>());
      }
      out.push_back({o.at("label").get<Label>(), std::move(m)});
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed measurement document: ") + e.what());
  }
}

}  // namespace

json to_json(const StrongMeasurement& m) {
  return encode(m.outcomes(), m.dim(), m.mode() == Mode::Strong ? "strong" : "experiment");
}

json to_json(const Povm& p) { return encode(p.outcomes(), p.dim(), "povm"); }

json to_json(const Pvm& p) { return encode(p.outcomes(), p.dim(), "pvm"); }

StrongMeasurement measurement_from_json(const json& j) {
  std::string mode;
  auto outcomes = decode(j, mode);
  if (mode == "strong") return StrongMeasurement(std::move(outcomes), Mode::Strong);
  if (mode == "experiment") return StrongMeasurement(std::move(outcomes), Mode::Experiment);
  throw ValidationError("expected mode strong or experiment, got " + mode);
}

Povm povm_from_json(const json& j) {
  std::string mode;
  auto outcomes = decode(j, mode);
  if (mode != "povm" && mode != "pvm") throw ValidationError("expected mode povm, got " + mode);
  return Povm(std::move(outcomes));
}

Pvm pvm_from_json(const json& j) {
  std::string mode;
  auto outcomes = decode(j, mode);
  if (mode != "pvm") throw ValidationError("expected mode pvm, got " + mode);
  return Pvm(std::move(outcomes));
}

}  // namespace pilotwave::formalism
