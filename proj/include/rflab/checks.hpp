#pragma once

// Verification of identities, explicit inequalities and ratio-extracted
// estimates along Ricci flow trajectories and on static metrics.
//
// Two verdict tiers: statements whose constants are explicit get pass/fail;
// statements with unvalued universal constants report the supremum of
// LHS / structural RHS over the trajectory (status ratio-extracted).
//
// Time-dependent estimates that are stated for unit initial volume are
// evaluated in normalized time t vol(0)^{-2/n}, which makes every check
// invariant under parabolic rescaling.

#include "rflab/constants.hpp"
#include "rflab/flow.hpp"
#include "rflab/norms.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rflab {

enum class CheckStatus { Pass, Fail, RatioExtracted, HypothesisNotMet, Unavailable };

std::string to_string(CheckStatus s);

/// One evaluated instance of an inequality (a time, a witness, a measure).
struct CheckSample {
  std::string label;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::Unavailable;
  std::optional<double> sup_ratio;
  std::optional<double> fitted_constant;
  std::size_t samples = 0;
  bool vacuous = false;
  /// Worst offenders, largest ratio first.
  std::vector<CheckSample> details;
  /// Named scalar outputs: margins, first violation times, diagnostics.
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;
  ConstantPrimitives primitives;

  bool failed() const { return status == CheckStatus::Fail; }
};

/// Keeps the `keep` samples with the largest ratio.
void keep_worst(std::vector<CheckSample>& samples, std::size_t keep = 5);

/// Second-order central differences on a nonuniform grid, at interior
/// indices 1 .. N-2 (stride 1) or 2 .. N-3 (stride 2, for Richardson).
std::vector<double> central_differences(const std::vector<double>& t,
                                        const std::vector<double>& y, int stride = 1);

/// Time normalized to unit initial volume: t vol(0)^{-2/n}.
double normalized_time(const Trajectory& traj, double t);

// ---- identities ---------------------------------------------------------

inline constexpr double kIdentityTolerance = 1e-7;

/// dvol/dt = -R vol by central differences, residual
/// |dvol/dt + R vol| / (|R| vol + 1) <= tol. Also checks the algebraic bound
/// |R| <= sqrt(n(n-1)/2) |Rm| behind the volume-rate inequality.
CheckReport check_volume_identity(const Trajectory& traj, double tol = kIdentityTolerance);

/// dR/dt = 2 |Ric|^2 (homogeneous metrics), residual
/// |dR/dt - 2|Ric|^2| / (2|Ric|^2 + 1) <= tol.
CheckReport check_scalar_identity(const Trajectory& traj, double tol = kIdentityTolerance);

// ---- flow estimates ------------------------------------------------------

/// ||Rm||_{n/2}(t) <= 2 ||Rm||_{n/2}(0) for t <= T0, asserted only when
/// ||Rm||_{n/2}(0) cs0^2 <= eps(n, gamma).
CheckReport check_n2_bound(const Trajectory& traj, const ConstantChain& chain);

/// Fitted c in |Rm|(t) <= c cs0^2 ||Rm||_{n/2}(0) / t over (0, horizon].
/// Horizon defaults to the last recorded time.
CheckReport check_c0_bound(const Trajectory& traj, double cs0,
                           std::optional<double> horizon = std::nullopt);

/// Fitted c in d/dt int |Rm|^p <= c p int |Rm|^{p+1}. The gradient term
/// vanishes on homogeneous metrics.
CheckReport check_lp_evolution(const Trajectory& traj, double p);

/// Traces a_n ||Rm||_{n/2}(t) cs0^2 e^{8 delta0 t / n} <= 1/(n(n-1)) and, where
/// it holds, fits c in the flow-time Sobolev inequality on the witnesses:
///   ||u||_{2n/(n-2)}^2 <= c e^{8 delta0 t / n} (cs0^2 ||grad u||^2 + ||u||^2)
/// (unit-initial-volume form). At most max_states states are evaluated.
CheckReport check_sobolev_along_flow(const Trajectory& traj, double cs0,
                                     const ConstantPrimitives& primitives,
                                     const FamilyDescriptor& family,
                                     std::size_t max_states = 48);

/// Energy growth estimates for J = int |Rm|^{n/2} under the smallness
/// condition c(n) e^{8 t delta0/n} ||Rm||_{n/2}(t) cs0^2 <= 1/(n(n-1)):
/// fitted c in J(t) <= exp(c int_0^t e^{8 s delta0/n} ||Rm||_{n/2}) J(0) and in
/// J(t) <= exp(2 c e^{8 t delta0/n} t ||Rm||_{n/2}(0)) J(0).
CheckReport check_integral_estimates(const Trajectory& traj, double cs0,
                                     const ConstantPrimitives& primitives);

/// For each recorded t, the recorded t* in [t/3, t/2] minimizing
/// ||Rm||_{p0/2}(t*), and the fitted c in
/// ||Rm||_{p0/2}(t*) <= c ||Rm||_{n/2}(0) (cs0^2/t + 1)^{2/n}. Reported only.
CheckReport check_intermediate_time(const Trajectory& traj, double cs0);

/// Fitted c in the Moser-iteration sup bound
///   sup_{[(1 - 1/mu) t, t]} |Rm| <= c cs0^{-4(n-2)/n^2} (cs0^2/t)^{1-4/n^2}
///                                  (int_window int |Rm|^{p0/2})^{2/p0}.
CheckReport check_moser_bound(const Trajectory& traj, double cs0);

// ---- discrete inequalities ----------------------------------------------

struct WeightedSample {
  double value = 0.0;
  double weight = 0.0;
};

/// Both sides of each Hoelder-type inequality for a discrete measure.
struct HolderSides {
  double power_lhs = 0.0, power_rhs = 0.0;              // int f^{p+1} vs L^{n/2}, L^{pn/(n-2)}
  double critical_lhs = 0.0, critical_rhs = 0.0;        // same at p = n/2
  double interp_lhs = 0.0, interp_mid = 0.0, interp_rhs = 0.0;  // interpolation + Young
  double moser_lhs = 0.0, moser_rhs = 0.0;              // int u^{p+1} vs L^{p0/2}
};

/// Throws DomainError on negative values, nonpositive weights, p < 1, n < 3
/// or an empty sample list.
HolderSides holder_sides(const std::vector<WeightedSample>& samples, double p, int n,
                         double epsilon);

/// Evaluates every inequality for one measure, exponent and epsilon.
CheckReport check_holder(const std::vector<WeightedSample>& samples, double p, int n,
                         double epsilon);

inline constexpr double kHolderSlack = 1e-12;

/// Default epsilon grid 10^{-3}, 10^{-2.5}, ..., 10^{3}.
std::vector<double> holder_epsilon_grid();

/// One report per inequality (holder_power, holder_critical,
/// holder_interpolation, holder_moser) over `measures` seeded random measures
/// for each n in dims.
std::vector<CheckReport> check_holder_suite(std::uint64_t seed, std::size_t measures = 1000,
                                            const std::vector<int>& dims = {3, 4, 5, 6, 7, 8});

// ---- static metric checks ------------------------------------------------

/// 2^{n/2+1} (2^{n/2} B^{n/2} + 1) sqrt(A/B).
double diameter_bound_rhs(double A, double B, int n);

/// Validates ||u||_{2n/(n-2)}^2 <= A ||grad u||^2 + B vol^{-2/n} ||u||^2 on
/// every witness, then checks diam / vol^{1/n} <= diameter_bound_rhs.
CheckReport check_diameter_bound(double A, double B, int n, double diam, double vol,
                                 const std::vector<WitnessNorms>& witnesses);

struct HypothesisInputs {
  int n = 0;
  double rm_n2 = 0.0;
  double rm_norm = 0.0;  ///< normalized (vol-averaged) L^{n/2} norm on a homogeneous metric
  double vol = 0.0;
  double ric_min = 0.0;
  std::optional<double> cs_upper;
  std::optional<double> diam;
  std::optional<double> ricci_deficit;  ///< normalized L^p norm of (Ric - kappa)_-
  bool sphere_times_flat = false;       ///< product with a sphere and a flat factor
};

/// Settings of the integral Ricci-bound variant; its threshold has no default.
struct IntegralVariant {
  std::optional<double> eps;
  double p = 0.0;  ///< 0 selects n
  double kappa = 0.0;
};

/// Hypotheses of the three infranil criteria (Sobolev form, diameter form,
/// integral Ricci form) under the configured primitives, with margins.
CheckReport hypothesis_report(const HypothesisInputs& in, const ConstantChain& chain,
                              const ConstantPrimitives& primitives,
                              const IntegralVariant& variant = {});

HypothesisInputs hypothesis_inputs(const ModelGeometry& model, const MetricState& g,
                                   std::optional<double> cs_upper,
                                   std::optional<double> diam_bound = std::nullopt,
                                   const IntegralVariant& variant = {});

// ---- suite ----------------------------------------------------------------

/// Relative change |a - b| / max(|a|, |b|) of two fits (0 when both vanish).
double fit_change(double a, double b);

struct SuiteInputs {
  double cs0 = 1.0;
  double gamma = 1.0;
  ConstantPrimitives primitives;
  FamilyDescriptor family;
  std::optional<double> diam_bound;
  double diameter_A = 1.0;
  double diameter_B = 1.0;
  IntegralVariant integral_variant;
  std::uint64_t seed = 20211104;
  std::size_t holder_measures = 1000;
  /// Exponent of lp_evolution; empty selects n/2.
  std::optional<double> lp_exponent;
};

/// Every check name the suite knows, sorted.
std::vector<std::string> suite_check_names();

/// Runs the selected checks (all when `only` is empty) concurrently and
/// returns the reports sorted by name. Unknown names throw ValidationError.
std::vector<CheckReport> run_suite(const Trajectory& traj, const SuiteInputs& in,
                                   const std::set<std::string>& only = {});

}  // namespace rflab
