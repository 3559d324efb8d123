#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/forward.hpp"
#include "carleman/geometry.hpp"
#include "carleman/grid.hpp"

namespace carleman {

/// A named set of key = value settings. Every key must be one of the
/// declared keys (see `scenario_keys`); values are parsed on access.
class Scenario {
 public:
  Scenario();  ///< all keys at their defaults

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  /// Throws BadOverride for an undeclared key.
  void set(const std::string& key, const std::string& value);
  /// Parses "key=value"; throws BadOverride when malformed.
  void apply_override(const std::string& assignment);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

/// Declared keys with their default values, in a stable order.
const std::vector<std::pair<std::string, std::string>>& scenario_keys();

/// Parses flat "key = value" text with "[scenario NAME]" section headers.
/// Lines starting with '#' are comments. Keys before the first header are
/// applied to every section.
std::vector<Scenario> parse_scenarios(const std::string& text);

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::string expect;
};

/// Built-in scenarios in registration order.
std::vector<ScenarioInfo> list_scenarios();
/// Built-in name or path of a .cfg file (first section). Throws UnknownScenario.
Scenario load_scenario(const std::string& name_or_path);

// ---------------------------------------------------------------------------
// Resolution to concrete evaluators

/// Domain for a command prefix ("geometry", "carleman", "qr", "stability",
/// "coefficient"), using `<prefix>.nx` and `<prefix>.ny`.
SpatialDomain scenario_domain(const Scenario& sc, const std::string& prefix);
TimeAxis scenario_time(const Scenario& sc, const std::string& prefix);
SpaceTimeField scenario_field(const Scenario& sc);
SourceSpec scenario_source(const Scenario& sc);
TraceOptions scenario_trace(const Scenario& sc);
/// eps, resolving "auto" to 0.1 max phi0.
double scenario_eps(const Scenario& sc, const WeightField& weight);
/// Observation mask selected by `sigma` (plus | all).
BoundaryMask scenario_sigma(const Scenario& sc, const SpaceTimeField& field, const SpatialDomain& domain,
                            const TimeAxis& time);

}  // namespace carleman
