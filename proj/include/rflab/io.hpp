#pragma once

// Trajectory CSV, JSON serialization of reports, chains and metadata.
//
// CSV columns: t, g_11, g_12, ..., g_nn (row-major upper triangle, 1-based),
// vol, rm_norm, scalar_R, rm_n2_norm, J, theta, chi, ric_min, ric_max.
// Floats use the shortest representation that round-trips.

#include "rflab/checks.hpp"
#include "rflab/config.hpp"
#include "rflab/constants.hpp"
#include "rflab/flow.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace rflab {

using Json = nlohmann::ordered_json;

std::string format_double(double v);

std::vector<std::string> trajectory_columns(const ModelGeometry& model);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Parses a trajectory CSV for `model`. The derived context is computed from
/// the first state. Throws SchemaError naming the first offending column on
/// a header mismatch, an unparsable cell, non-increasing t, an invalid metric
/// or derived columns that disagree with recomputation (relative tol).
Trajectory read_trajectory_csv(std::istream& in, const ModelGeometry& model,
                               const std::function<DerivedContext(const MetricState&)>& context,
                               double tol = 1e-10);

Json to_json(const ConstantPrimitives& p);
Json to_json(const CheckReport& r);
Json to_json(const std::vector<CheckReport>& reports);
Json to_json(const ConstantChain& c);
Json to_json(const MoserSchedule& s);
Json to_json(const ExactMoserSums& s);
Json to_json(const IntegratorStats& s);
Json to_json(const ModelGeometry& m);
Json to_json(const ModelGeometry& model, const MetricState& g);
/// Trajectory as an array of records keyed like the CSV columns.
Json trajectory_json(const Trajectory& traj);

/// Flattens nested objects to "a.b.c" keys and writes key,value rows.
void write_flat_csv(std::ostream& out, const Json& j);

/// JSON number, or null when not finite.
Json number(double v);

}  // namespace rflab
