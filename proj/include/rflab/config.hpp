#pragma once

// Run configuration: a sectioned key = value text file with a fixed, typed
// schema.
//
//   # comment
//   [model]
//   kind = lie_group
//   dim = 3
//   brackets = 1 2 3 1.0        # [e_i, e_j] = coeff e_k, 1-based; list items split by ';'
//
// Unknown sections or keys, malformed values and out-of-range numbers raise
// ConfigError carrying the line number.

#include "rflab/checks.hpp"
#include "rflab/constants.hpp"
#include "rflab/flow.hpp"
#include "rflab/geometry.hpp"
#include "rflab/norms.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rflab {

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;  ///< 0 for command-line overrides
};

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  /// Applies "section.key=value"; replaces an existing entry or appends one.
  void apply_override(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool has_section(const std::string& section) const;
  const ConfigEntry* find(const std::string& section, const std::string& key) const;
  const std::vector<ConfigEntry>& entries() const { return entries_; }

 private:
  std::vector<ConfigEntry> entries_;
  std::vector<std::string> sections_;
};

struct MetricSettings {
  std::optional<Eigen::MatrixXd> matrix;
  std::optional<std::vector<double>> scales;
  double metric_scale = 1.0;
  /// Multiplies the radius of the last factor (product) or the length of
  /// the last basis vector (Lie group).
  std::optional<double> collapse;
};

struct SobolevSettings {
  FamilyDescriptor family;
  std::optional<double> cs0;
};

struct OutputSettings {
  std::string dir;
  std::string format = "csv";
};

struct SweepSettings {
  std::string key;  ///< section.key of a real-valued entry
  std::vector<std::string> values;
};

struct CheckSettings {
  double diameter_A = 1.0;
  double diameter_B = 1.0;
  std::size_t holder_measures = 1000;
  std::optional<double> lp_p;
};

struct RunConfig {
  std::optional<ModelSpec> model;
  MetricSettings metric;
  std::optional<double> diam_bound;
  FlowConfig flow;
  bool normalize = false;
  bool has_constants = false;
  ConstantPrimitives primitives;
  IntegralVariant integral_variant;
  std::optional<int> constants_n;
  int moser_terms = 32;
  double moser_t_prime = 1.0;
  SobolevSettings sobolev;
  CheckSettings checks;
  OutputSettings output;
  std::optional<SweepSettings> sweep;
  std::uint64_t seed = 20211104;
};

/// Interprets the parsed file against the schema.
RunConfig interpret(const ConfigFile& file);

/// Kind of the value stored under section.key, or empty for unknown keys.
std::optional<std::string> schema_type(const std::string& section, const std::string& key);

/// Initial metric: model.metric / model.scales or the reference metric, then
/// model.collapse, model.metric_scale and (if flow.normalize) unit volume.
MetricState initial_metric(const ModelGeometry& model, const RunConfig& cfg);

struct Cs0Resolution {
  double value = 0.0;
  std::string source;  ///< "explicit" or "gallot"
  std::optional<double> diam;
  double kappa = 0.0;
};

/// sobolev.cs0 when set; otherwise the Gallot upper bound with the exact
/// diameter (products) or model.diam_bound. Throws ConfigError when neither
/// is available.
Cs0Resolution resolve_cs0(const ModelGeometry& model, const MetricState& g, const RunConfig& cfg);

/// Check-suite inputs taken from the configuration.
SuiteInputs suite_inputs(const RunConfig& cfg, double cs0);

}  // namespace rflab
