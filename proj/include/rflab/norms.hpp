#pragma once

// Integral curvature norms and two-sided Sobolev-constant estimates.
//
// On a homogeneous model every curvature integrand is constant, so
// (int |Rm|^p)^{1/p} = |Rm| vol^{1/p}. The Sobolev constant uses the
// scale-free normalization
//   ||u||_{2n/(n-2)} <= C ||grad u||_2 + vol^{-1/n} ||u||_2.

#include "rflab/geometry.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rflab {

/// (int |Rm|^p)^{1/p}. p = n/2 gives the scale-invariant norm.
double rm_lp_norm(const CurvatureData& curv, double vol, double p);
double rm_n2_norm(const CurvatureData& curv, double vol, int n);

/// ||R^-||_{n/2}, the negative part of scalar curvature.
double scalar_negative_part_norm(const CurvatureData& curv, double vol, int n);

/// Normalized L^p norm of (Ric - kappa)_-, using the lowest Ricci eigenvalue.
/// Requires p > n/2.
double integral_ricci_deficit(const CurvatureData& curv, double vol, double p, double kappa);

/// Provider of the constant c(n, kappa) in C_S <= c(n, kappa) diam / vol^{1/n}.
///
/// The default is c0 * exp(sqrt((n - 1) kappa)): equal to c0 at kappa = 0 and
/// nondecreasing in kappa. The true constant is not known in closed form, so
/// the choice is echoed into every report.
class GallotStrategy {
 public:
  enum class Growth { Constant, Exponential };

  GallotStrategy() = default;
  GallotStrategy(double c0, Growth growth) : c0_(c0), growth_(growth) {}

  static GallotStrategy custom(std::function<double(int, double)> fn, std::string description);

  double operator()(int n, double kappa) const;
  std::string description() const;
  double c0() const { return c0_; }
  Growth growth() const { return growth_; }

 private:
  double c0_ = 1.0;
  Growth growth_ = Growth::Exponential;
  std::function<double(int, double)> custom_;
  std::string custom_description_;
};

double gallot_upper(int n, double kappa, double diam, double vol, const GallotStrategy& strategy);

/// Smallest kappa >= 0 with diam^2 Ric >= -kappa.
double gallot_kappa(const CurvatureData& curv, double diam);

enum class WitnessFamily { Eigenfunction, Bump, Cap };

std::string to_string(WitnessFamily f);
WitnessFamily witness_family_from_string(const std::string& s);

struct FamilyDescriptor {
  WitnessFamily kind = WitnessFamily::Eigenfunction;
  std::size_t grid = 512;
  double refine_tol = 1e-6;
  /// Offsets (eigenfunction) or support radii in (0, pi] (bump, cap).
  /// Empty selects the built-in parameter set.
  std::vector<double> parameters;
};

/// Norms of one test function on the model.
struct WitnessNorms {
  std::string name;
  double critical = 0.0;  ///< ||u||_{2n/(n-2)}
  double l2 = 0.0;        ///< ||u||_2
  double grad_l2 = 0.0;   ///< ||grad u||_2
  std::size_t grid = 0;   ///< resolution at which refinement stopped
};

/// Evaluates every witness of the family on every admissible carrier: sphere,
/// circle and torus factors of a product, or closed basis directions of a Lie
/// quotient (coordinate period covolume^{1/n}). Refines each witness by grid
/// doubling until its Sobolev quotient changes by at most refine_tol.
std::vector<WitnessNorms> evaluate_witnesses(const ModelGeometry& model, const MetricState& g,
                                             const FamilyDescriptor& family);

/// (||u||_crit - vol^{-1/n} ||u||_2) / ||grad u||_2, or empty when the
/// gradient vanishes.
std::optional<double> witness_quotient(const WitnessNorms& w, double vol, int n);

struct SobolevLower {
  double value = 0.0;
  bool clamped = false;  ///< raw maximum was negative
  std::string witness;
};

/// Lower bound on C_S from the best witness. Throws DomainError when the
/// model admits no witness.
SobolevLower sobolev_lower(const ModelGeometry& model, const MetricState& g,
                           const FamilyDescriptor& family);

struct SobolevEstimate {
  std::optional<double> upper;
  std::optional<double> lower;
  double kappa = 0.0;
  std::string witness;

  /// lower <= upper when both exist.
  bool consistent() const { return !upper || !lower || *lower <= *upper; }
};

}  // namespace rflab
