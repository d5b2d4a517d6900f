#pragma once

// Homogeneous model spaces on which Ricci flow reduces to an ODE.
//
// Two families are supported:
//
//  * Lie group quotients Gamma\G with a left-invariant metric. The metric is
//    an SPD matrix g_ij = <e_i, e_j> in a fixed basis of the Lie algebra with
//    brackets [e_i, e_j] = c^k_ij e_k. The lattice enters only through the
//    volume of the basis fundamental domain (covolume).
//  * Riemannian products of round spheres, circles and flat tori. The metric
//    is one squared radius per factor.
//
// Curvature on both is algebraic: no derivatives of the metric are needed.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rflab {

enum class ModelKind { LieGroupQuotient, ProductOfSpaceForms };

enum class SpaceForm { Sphere, Circle, FlatTorus };

std::string to_string(ModelKind kind);
std::string to_string(SpaceForm form);

/// One factor of a product model. A flat torus of dimension d with radius r
/// is the product of d circles of radius r.
struct Factor {
  SpaceForm form = SpaceForm::Sphere;
  int dim = 0;
  double radius = 1.0;
};

/// Dense c^k_ij storage, zero-based indices.
class StructureConstants {
 public:
  StructureConstants() = default;
  explicit StructureConstants(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }
  double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }
  bool is_zero() const;

 private:
  std::size_t index(int k, int i, int j) const {
    return static_cast<std::size_t>((k * n_ + i) * n_ + j);
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// [e_i, e_j] contains coeff * e_k. Zero-based.
struct BracketEntry {
  int i = 0;
  int j = 0;
  int k = 0;
  double coeff = 0.0;
};

/// Unvalidated model description as read from a config file.
struct ModelSpec {
  ModelKind kind = ModelKind::LieGroupQuotient;
  int dim = 0;
  std::vector<BracketEntry> brackets;
  double covolume = 1.0;
  std::vector<Factor> factors;
};

class ModelGeometry {
 public:
  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const StructureConstants& structure_constants() const { return constants_; }
  double covolume() const { return covolume_; }
  const std::vector<Factor>& factors() const { return factors_; }
  /// First frame index of each factor (products only).
  const std::vector<int>& factor_offsets() const { return offsets_; }

  /// Basis directions k whose dual one-form is closed (c^k_ij = 0 for all
  /// i, j). The coordinate along such a direction descends to a circle-valued
  /// function on the quotient.
  std::vector<int> closed_directions() const;

 private:
  friend ModelGeometry build_model(const ModelSpec& spec);

  ModelKind kind_ = ModelKind::LieGroupQuotient;
  int dim_ = 0;
  StructureConstants constants_;
  double covolume_ = 1.0;
  std::vector<Factor> factors_;
  std::vector<int> offsets_;
};

/// Validates `spec` and builds the model. Brackets given for only one order
/// of (i, j) are completed by antisymmetry; both orders must agree.
ModelGeometry build_model(const ModelSpec& spec);

ModelGeometry heisenberg_model(double covolume = 1.0);
ModelGeometry flat_torus_model(int n, double covolume = 1.0);
/// su(2) with [e_i, e_j] = 2 eps_ijk e_k. The identity metric is the unit S^3.
ModelGeometry su2_model();
ModelGeometry product_model(std::vector<Factor> factors);

/// Metric datum at one flow time. `matrix` is used by Lie group quotients,
/// `scales` (squared radii) by products.
struct MetricState {
  Eigen::MatrixXd matrix;
  std::vector<double> scales;
  double time = 0.0;
};

/// Identity matrix, or the squared reference radii.
MetricState reference_metric(const ModelGeometry& model);

/// g -> factor * g. Time is left untouched.
MetricState scale_metric(const MetricState& g, double factor);

/// Throws DimensionError on shape mismatch and SpectralError when g is not
/// positive definite.
void validate_metric(const ModelGeometry& model, const MetricState& g);
bool is_positive_definite(const ModelGeometry& model, const MetricState& g);

/// Smallest eigenvalue of the metric (smallest scale for products).
double min_metric_eigenvalue(const ModelGeometry& model, const MetricState& g);

/// Full n x n metric in the fixed frame. Products use the frame that is
/// orthonormal for the unit-radius factors, so the matrix is block-scalar.
Eigen::MatrixXd metric_matrix(const ModelGeometry& model, const MetricState& g);

/// Inverse of metric_matrix. Throws ValidationError if a product matrix is not
/// block-scalar.
MetricState metric_from_matrix(const ModelGeometry& model, const Eigen::MatrixXd& m,
                               double time);

struct OrthonormalFrame {
  Eigen::MatrixXd change;  ///< L with L^T g L = I (symmetric g^{-1/2})
  StructureConstants constants;
};

OrthonormalFrame orthonormalize(const ModelGeometry& model, const MetricState& g);

/// R_ijkl = <R(e_i, e_j) e_l, e_k> in an orthonormal frame; sectional
/// curvature of span(e_i, e_j) is R_ijij.
class RiemannTensor {
 public:
  RiemannTensor() = default;
  explicit RiemannTensor(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  int dim() const { return n_; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  const std::vector<double>& data() const { return data_; }

  /// R(u, v, u, v) for orthonormal u, v.
  double sectional(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * n_ + j) * n_ + k) * n_ + l);
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct CurvatureData {
  RiemannTensor rm;
  Eigen::MatrixXd ric;  ///< orthonormal frame
  double scalar = 0.0;
  double rm_norm = 0.0;
  double sec_min = 0.0;
  double sec_max = 0.0;

  /// Ascending.
  Eigen::VectorXd ric_eigenvalues() const;
  double ric_norm_squared() const { return ric.squaredNorm(); }
};

/// Sectional extremes are taken over the frame coordinate planes plus
/// `random_planes` seeded random planes.
struct SectionalSampling {
  std::size_t random_planes = 10000;
  std::uint64_t seed = 20211104;
};

CurvatureData curvature(const ModelGeometry& model, const MetricState& g,
                        const SectionalSampling& sampling = {});

/// Ricci tensor expressed in the fixed frame of the metric matrix.
Eigen::MatrixXd ricci_fixed_frame(const ModelGeometry& model, const MetricState& g);

double volume(const ModelGeometry& model, const MetricState& g);

/// Exact for products; empty for Lie group quotients, whose diameter depends
/// on the lattice in a way we do not model.
std::optional<double> diameter(const ModelGeometry& model, const MetricState& g);

/// Volume of the unit round d-sphere.
double unit_sphere_volume(int d);

}  // namespace rflab
