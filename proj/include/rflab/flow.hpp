#pragma once

// Ricci flow dg/dt = -2 Ric(g) on a homogeneous model, integrated as an ODE
// on the finite-dimensional space of invariant metrics.

#include "rflab/geometry.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rflab {

struct FlowConfig {
  double gamma = 1.0;
  /// Empty: integrate to the horizon T0 = gamma vol0^{2/n} cs0^2.
  std::optional<double> t_end;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  /// Empty: 1e6 x the initial |Rm| (no limit for flat initial data).
  std::optional<double> max_rm;
  /// Spacing of recorded states in flow time. Empty: t_end / 500.
  std::optional<double> record_every;

  void validate() const;
};

/// Data needed for the derived quantities theta and chi.
struct DerivedContext {
  double cs0 = 1.0;  ///< C_S(0), or an upper bound for it
  double c_n = 1.0;
};

struct DerivedRecord {
  double vol = 0.0;
  double rm_norm = 0.0;
  double scalar = 0.0;
  Eigen::VectorXd ric_eigenvalues;  ///< ascending, orthonormal frame
  double rm_n2_norm = 0.0;
  double J = 0.0;      ///< int |Rm|^{n/2}
  double theta = 0.0;  ///< ||Rm||_{n/2} C_S(0)^2
  double chi = 0.0;    ///< c(n) e^{8 t delta0 / n} ||Rm||_{n/2}

  double ric_min() const { return ric_eigenvalues[0]; }
  double ric_max() const { return ric_eigenvalues[ric_eigenvalues.size() - 1]; }
  double ric_norm_squared() const { return ric_eigenvalues.squaredNorm(); }
};

enum class Termination { HorizonReached, CurvatureBlowup, StepUnderflow };

std::string to_string(Termination t);

struct IntegratorStats {
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double t_end = 0.0;
  double max_rm = 0.0;
  double record_every = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;       ///< error-control rejections
  std::size_t spd_rejected = 0;   ///< steps that left the SPD cone
  std::size_t rhs_evaluations = 0;
  Termination termination = Termination::HorizonReached;
};

struct Trajectory {
  ModelGeometry model;
  std::vector<MetricState> states;
  std::vector<DerivedRecord> derived;
  DerivedContext context;
  double delta0 = 0.0;
  IntegratorStats meta;

  std::vector<double> times() const;
  std::size_t size() const { return states.size(); }
};

/// -2 Ric(g) in the fixed frame of metric_matrix (block diagonal for products).
Eigen::MatrixXd ricci_rhs(const ModelGeometry& model, const MetricState& g);

/// delta0 = C_S(0)^{-2} + ||R^-||_{n/2}(0) for the given initial metric.
double initial_delta0(const ModelGeometry& model, const MetricState& g0, double cs0);

DerivedRecord derive(const ModelGeometry& model, const MetricState& g, const DerivedContext& ctx,
                     double delta0);

/// Builds a trajectory from states, recomputing every derived record.
Trajectory make_trajectory(const ModelGeometry& model, std::vector<MetricState> states,
                           const DerivedContext& ctx, IntegratorStats meta = {});

/// Adaptive Dormand-Prince 5(4) integration. Steps leaving the SPD cone are
/// rejected and halved. Recorded states sit exactly on multiples of
/// record_every (plus the terminal state).
Trajectory integrate(const ModelGeometry& model, const MetricState& g0, const FlowConfig& cfg,
                     const DerivedContext& ctx = {});

double horizon_T0(double gamma, double vol0, double cs0, int n);

/// g~(t) = lambda^2 g(t / lambda^2).
Trajectory parabolic_rescale(const Trajectory& traj, double lambda);

MetricState normalize_to_unit_volume(const MetricState& g0, const ModelGeometry& model);

}  // namespace rflab
