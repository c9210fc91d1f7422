#pragma once

#include <json.hpp>

#include "pilotwave/formalism.hpp"

/// JSON documents of the form
///   {"dim": d, "mode": "strong"|"experiment"|"povm"|"pvm",
///    "outcomes": [{"label": [..], "matrix": [[re, im], ...]}]}
/// with matrices flattened row-major. Doubles are written in shortest
/// round-trip form, so reading back reproduces every bit.
namespace pilotwave::formalism {

nlohmann::json to_json(const StrongMeasurement& m);
nlohmann::json to_json(const Povm& p);
nlohmann::json to_json(const Pvm& p);

/// Throw ValidationError on a malformed document or a failed invariant.
StrongMeasurement measurement_from_json(const nlohmann::json& j);
Povm povm_from_json(const nlohmann::json& j);
Pvm pvm_from_json(const nlohmann::json& j);

}  // namespace pilotwave::formalism
