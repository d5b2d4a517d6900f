#include "rflab/geometry.hpp"

#include "rflab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace rflab {

namespace {

std::string triple(int i, int j, int k) {
  std::ostringstream os;
  os << "(i,j,k) = (" << i + 1 << "," << j + 1 << "," << k + 1 << ")";
  return os.str();
}

void check_index(int idx, int n, const BracketEntry& e) {
  if (idx < 0 || idx >= n) {
    throw ValidationError("bracket index out of range at " + triple(e.i, e.j, e.k) +
                          " for dimension " + std::to_string(n));
  }
}

StructureConstants assemble_constants(const ModelSpec& spec) {
  const int n = spec.dim;
  StructureConstants c(n);
  // explicit entries, keyed by (k, i, j)
  std::map<std::tuple<int, int, int>, double> given;
  for (const auto& e : spec.brackets) {
    check_index(e.i, n, e);
    check_index(e.j, n, e);
    check_index(e.k, n, e);
    if (e.i == e.j && e.coeff != 0.0) {
      throw ValidationError("antisymmetry violated: [e_i, e_i] nonzero at " +
                            triple(e.i, e.j, e.k));
    }
    const auto key = std::make_tuple(e.k, e.i, e.j);
    if (auto it = given.find(key); it != given.end() && it->second != e.coeff) {
      throw ValidationError("conflicting duplicate bracket entry at " + triple(e.i, e.j, e.k));
    }
    given[key] = e.coeff;
  }
  for (const auto& [key, coeff] : given) {
    const auto [k, i, j] = key;
    const auto mirror = std::make_tuple(k, j, i);
    if (auto it = given.find(mirror); it != given.end()) {
      const double tol = 1e-12 * std::max(1.0, std::abs(coeff));
      if (std::abs(it->second + coeff) > tol) {
        throw ValidationError("antisymmetry violated: c^k_ij != -c^k_ji at " + triple(i, j, k));
      }
    }
    c(k, i, j) = coeff;
    c(k, j, i) = -coeff;
  }
  return c;
}

void check_jacobi(const StructureConstants& c) {
  const int n = c.dim();
  double scale = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(c(k, i, j)));
  const double tol = 1e-12 * std::max(1.0, scale * scale);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) {
            s += c(m, i, j) * c(l, m, k) + c(m, j, k) * c(l, m, i) + c(m, k, i) * c(l, m, j);
          }
          if (std::abs(s) > tol) {
            throw ValidationError("Jacobi identity violated at " + triple(i, j, k) +
                                  ", component " + std::to_string(l + 1));
          }
        }
      }
    }
  }
}

void check_factor(const Factor& f) {
  if (!(f.radius > 0.0) || !std::isfinite(f.radius)) {
    throw ValidationError("factor radius must be positive");
  }
  switch (f.form) {
    case SpaceForm::Sphere:
      if (f.dim < 2) throw ValidationError("sphere factor needs dimension >= 2");
      break;
    case SpaceForm::Circle:
      if (f.dim != 1) throw ValidationError("circle factor has dimension 1");
      break;
    case SpaceForm::FlatTorus:
      if (f.dim < 1) throw ValidationError("flat torus factor needs dimension >= 1");
      break;
  }
}

// Symmetric square root and inverse square root of an SPD matrix.
struct SpdRoots {
  Eigen::MatrixXd sqrt;
  Eigen::MatrixXd inv_sqrt;
};

SpdRoots spd_roots(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  const Eigen::VectorXd d = es.eigenvalues();
  const Eigen::MatrixXd& v = es.eigenvectors();
  return {v * d.cwiseSqrt().asDiagonal() * v.transpose(),
          v * d.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose()};
}

StructureConstants conjugate(const StructureConstants& c, const Eigen::MatrixXd& frame,
                             const Eigen::MatrixXd& frame_inv) {
  const int n = c.dim();
  StructureConstants t1(n), t2(n), out(n);
  // t1(k, a, j) = sum_i c(k, i, j) L(i, a)
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += c(k, i, j) * frame(i, a);
        t1(k, a, j) = s;
      }
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += t1(k, a, j) * frame(j, b);
        t2(k, a, b) = s;
      }
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += frame_inv(m, k) * t2(k, a, b);
        out(m, a, b) = s;
      }
  return out;
}

RiemannTensor koszul_curvature(const StructureConstants& c) {
  const int n = c.dim();
  // gamma(k, i, j) = <nabla_{e_i} e_j, e_k>
  StructureConstants gamma(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        gamma(k, i, j) = 0.5 * (c(k, i, j) - c(i, j, k) + c(j, k, i));

  RiemannTensor rm(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) {
            s += gamma(m, j, l) * gamma(k, i, m) - gamma(m, i, l) * gamma(k, j, m) -
                 c(m, i, j) * gamma(k, m, l);
          }
          rm(i, j, k, l) = s;
        }
  return rm;
}

RiemannTensor product_curvature(const ModelGeometry& model, const MetricState& g) {
  RiemannTensor rm(model.dim());
  const auto& factors = model.factors();
  const auto& offsets = model.factor_offsets();
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (factors[f].form != SpaceForm::Sphere) continue;
    const double inv_s = 1.0 / g.scales[f];
    const int lo = offsets[f];
    const int hi = lo + factors[f].dim;
    for (int i = lo; i < hi; ++i)
      for (int j = lo; j < hi; ++j) {
        if (i == j) continue;
        rm(i, j, i, j) = inv_s;
        rm(i, j, j, i) = -inv_s;
      }
  }
  return rm;
}

void fill_sectional_extremes(CurvatureData& out, const SectionalSampling& sampling) {
  const int n = out.rm.dim();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double k = out.rm(i, j, i, j);
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
  std::mt19937_64 rng(sampling.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd u(n), v(n);
  for (std::size_t s = 0; s < sampling.random_planes; ++s) {
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    u.normalize();
    v -= v.dot(u) * u;
    const double vn = v.norm();
    if (vn < 1e-8) continue;
    v /= vn;
    const double k = out.rm.sectional(u, v);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  out.sec_min = lo;
  out.sec_max = hi;
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::LieGroupQuotient ? "lie_group" : "product";
}

std::string to_string(SpaceForm form) {
  switch (form) {
    case SpaceForm::Sphere:
      return "sphere";
    case SpaceForm::Circle:
      return "circle";
    case SpaceForm::FlatTorus:
      return "torus";
  }
  return "?";
}

bool StructureConstants::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

std::vector<int> ModelGeometry::closed_directions() const {
  std::vector<int> out;
  if (kind_ != ModelKind::LieGroupQuotient) return out;
  for (int k = 0; k < dim_; ++k) {
    bool closed = true;
    for (int i = 0; i < dim_ && closed; ++i)
      for (int j = 0; j < dim_ && closed; ++j) closed = constants_(k, i, j) == 0.0;
    if (closed) out.push_back(k);
  }
  return out;
}

ModelGeometry build_model(const ModelSpec& spec) {
  ModelGeometry m;
  m.kind_ = spec.kind;
  if (spec.kind == ModelKind::LieGroupQuotient) {
    if (spec.dim < 3) {
      throw DimensionError("Lie group quotient needs dimension >= 3, got " +
                           std::to_string(spec.dim));
    }
    if (!(spec.covolume > 0.0) || !std::isfinite(spec.covolume)) {
      throw ValidationError("covolume must be positive");
    }
    m.dim_ = spec.dim;
    m.covolume_ = spec.covolume;
    m.constants_ = assemble_constants(spec);
    check_jacobi(m.constants_);
    return m;
  }

  if (spec.factors.empty()) throw ValidationError("product model needs at least one factor");
  int total = 0;
  for (const auto& f : spec.factors) {
    check_factor(f);
    m.offsets_.push_back(total);
    total += f.dim;
  }
  if (spec.dim != 0 && spec.dim != total) {
    throw DimensionError("factor dimensions sum to " + std::to_string(total) +
                         " but model.dim is " + std::to_string(spec.dim));
  }
  if (total < 3) {
    throw DimensionError("product model needs total dimension >= 3, got " +
                         std::to_string(total));
  }
  m.dim_ = total;
  m.factors_ = spec.factors;
  return m;
}

ModelGeometry heisenberg_model(double covolume) {
  ModelSpec spec;
  spec.kind = ModelKind::LieGroupQuotient;
  spec.dim = 3;
  spec.covolume = covolume;
  spec.brackets = {{0, 1, 2, 1.0}};
  return build_model(spec);
}

ModelGeometry flat_torus_model(int n, double covolume) {
  ModelSpec spec;
  spec.kind = ModelKind::LieGroupQuotient;
  spec.dim = n;
  spec.covolume = covolume;
  return build_model(spec);
}

ModelGeometry su2_model() {
  ModelSpec spec;
  spec.kind = ModelKind::LieGroupQuotient;
  spec.dim = 3;
  // The quotient is SU(2) itself: vol of the unit S^3.
  spec.covolume = unit_sphere_volume(3);
  spec.brackets = {{0, 1, 2, 2.0}, {1, 2, 0, 2.0}, {2, 0, 1, 2.0}};
  return build_model(spec);
}

ModelGeometry product_model(std::vector<Factor> factors) {
  ModelSpec spec;
  spec.kind = ModelKind::ProductOfSpaceForms;
  spec.factors = std::move(factors);
  return build_model(spec);
}

MetricState reference_metric(const ModelGeometry& model) {
  MetricState g;
  if (model.kind() == ModelKind::LieGroupQuotient) {
    g.matrix = Eigen::MatrixXd::Identity(model.dim(), model.dim());
  } else {
    for (const auto& f : model.factors()) g.scales.push_back(f.radius * f.radius);
  }
  return g;
}

MetricState scale_metric(const MetricState& g, double factor) {
  MetricState out = g;
  out.matrix *= factor;
  for (auto& s : out.scales) s *= factor;
  return out;
}

double min_metric_eigenvalue(const ModelGeometry& model, const MetricState& g) {
  if (model.kind() == ModelKind::LieGroupQuotient) {
    if (!g.matrix.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
  }
  double lo = std::numeric_limits<double>::infinity();
  for (double s : g.scales) lo = std::isnan(s) ? s : std::min(lo, s);
  return lo;
}

bool is_positive_definite(const ModelGeometry& model, const MetricState& g) {
  if (model.kind() == ModelKind::LieGroupQuotient) {
    if (g.matrix.rows() != model.dim() || g.matrix.cols() != model.dim()) return false;
    if ((g.matrix - g.matrix.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, g.matrix.cwiseAbs().maxCoeff())) {
      return false;
    }
  } else if (g.scales.size() != model.factors().size()) {
    return false;
  }
  return min_metric_eigenvalue(model, g) > 0.0;
}

void validate_metric(const ModelGeometry& model, const MetricState& g) {
  if (model.kind() == ModelKind::LieGroupQuotient) {
    if (g.matrix.rows() != model.dim() || g.matrix.cols() != model.dim()) {
      throw DimensionError("metric matrix must be " + std::to_string(model.dim()) + "x" +
                           std::to_string(model.dim()));
    }
    if ((g.matrix - g.matrix.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, g.matrix.cwiseAbs().maxCoeff())) {
      throw SpectralError("metric matrix is not symmetric", std::nan(""));
    }
  } else if (g.scales.size() != model.factors().size()) {
    throw DimensionError("expected one scale per factor");
  }
  const double lo = min_metric_eigenvalue(model, g);
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "metric is not positive definite (minimum eigenvalue " << lo << ")";
    throw SpectralError(os.str(), lo);
  }
}

Eigen::MatrixXd metric_matrix(const ModelGeometry& model, const MetricState& g) {
  if (model.kind() == ModelKind::LieGroupQuotient) return g.matrix;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  const auto& offsets = model.factor_offsets();
  for (std::size_t f = 0; f < model.factors().size(); ++f) {
    for (int i = 0; i < model.factors()[f].dim; ++i) m(offsets[f] + i, offsets[f] + i) = g.scales[f];
  }
  return m;
}

MetricState metric_from_matrix(const ModelGeometry& model, const Eigen::MatrixXd& m,
                               double time) {
  MetricState g;
  g.time = time;
  if (m.rows() != model.dim() || m.cols() != model.dim()) {
    throw DimensionError("metric matrix has wrong shape");
  }
  if (model.kind() == ModelKind::LieGroupQuotient) {
    g.matrix = m;
    return g;
  }
  const auto& offsets = model.factor_offsets();
  for (std::size_t f = 0; f < model.factors().size(); ++f) {
    const int lo = offsets[f];
    const int d = model.factors()[f].dim;
    const double s = m(lo, lo);
    for (int i = 0; i < model.dim(); ++i)
      for (int j = 0; j < model.dim(); ++j) {
        const bool in_block = i >= lo && i < lo + d;
        if (!in_block) continue;
        const double expect = (i == j) ? s : 0.0;
        if (m(i, j) != expect || m(j, i) != expect) {
          throw ValidationError("product metric matrix is not block-scalar");
        }
      }
    g.scales.push_back(s);
  }
  return g;
}

OrthonormalFrame orthonormalize(const ModelGeometry& model, const MetricState& g) {
  validate_metric(model, g);
  OrthonormalFrame out;
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    const Eigen::MatrixXd m = metric_matrix(model, g);
    out.change = m.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();
    out.constants = StructureConstants(model.dim());
    return out;
  }
  const SpdRoots roots = spd_roots(g.matrix);
  out.change = roots.inv_sqrt;
  out.constants = conjugate(model.structure_constants(), roots.inv_sqrt, roots.sqrt);
  return out;
}

double RiemannTensor::sectional(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const double uv = u[i] * v[j];
      if (uv == 0.0) continue;
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) s += (*this)(i, j, k, l) * uv * u[k] * v[l];
    }
  return s;
}

Eigen::VectorXd CurvatureData::ric_eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ric, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CurvatureData curvature(const ModelGeometry& model, const MetricState& g,
                        const SectionalSampling& sampling) {
  validate_metric(model, g);
  const int n = model.dim();
  CurvatureData out;
  if (model.kind() == ModelKind::LieGroupQuotient) {
    out.rm = koszul_curvature(orthonormalize(model, g).constants);
  } else {
    out.rm = product_curvature(model, g);
  }
  out.ric = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += out.rm(i, j, k, j);
      out.ric(i, k) = s;
    }
  out.ric = 0.5 * (out.ric + out.ric.transpose()).eval();
  out.scalar = out.ric.trace();
  double sq = 0.0;
  for (double x : out.rm.data()) sq += x * x;
  out.rm_norm = std::sqrt(sq);
  fill_sectional_extremes(out, sampling);
  return out;
}

Eigen::MatrixXd ricci_fixed_frame(const ModelGeometry& model, const MetricState& g) {
  validate_metric(model, g);
  const int n = model.dim();
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
    const auto& offsets = model.factor_offsets();
    for (std::size_t f = 0; f < model.factors().size(); ++f) {
      const auto& fac = model.factors()[f];
      if (fac.form != SpaceForm::Sphere) continue;
      for (int i = 0; i < fac.dim; ++i) ric(offsets[f] + i, offsets[f] + i) = fac.dim - 1.0;
    }
    return ric;
  }
  const SpdRoots roots = spd_roots(g.matrix);
  const RiemannTensor rm =
      koszul_curvature(conjugate(model.structure_constants(), roots.inv_sqrt, roots.sqrt));
  Eigen::MatrixXd ric_on = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += rm(i, j, k, j);
      ric_on(i, k) = s;
    }
  // Ric_fixed = L^{-T} Ric_on L^{-1} with L^{-1} = g^{1/2} symmetric
  Eigen::MatrixXd ric = roots.sqrt * ric_on * roots.sqrt;
  return 0.5 * (ric + ric.transpose());
}

double unit_sphere_volume(int d) {
  const double h = 0.5 * (d + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

double volume(const ModelGeometry& model, const MetricState& g) {
  validate_metric(model, g);
  if (model.kind() == ModelKind::LieGroupQuotient) {
    return std::sqrt(g.matrix.determinant()) * model.covolume();
  }
  double v = 1.0;
  for (std::size_t f = 0; f < model.factors().size(); ++f) {
    const auto& fac = model.factors()[f];
    const double r = std::sqrt(g.scales[f]);
    switch (fac.form) {
      case SpaceForm::Sphere:
        v *= unit_sphere_volume(fac.dim) * std::pow(r, fac.dim);
        break;
      case SpaceForm::Circle:
      case SpaceForm::FlatTorus:
        v *= std::pow(2.0 * std::numbers::pi * r, fac.dim);
        break;
    }
  }
  return v;
}

std::optional<double> diameter(const ModelGeometry& model, const MetricState& g) {
  validate_metric(model, g);
  if (model.kind() == ModelKind::LieGroupQuotient) return std::nullopt;
  double sq = 0.0;
  for (std::size_t f = 0; f < model.factors().size(); ++f) {
    const auto& fac = model.factors()[f];
    const double d = std::numbers::pi * std::sqrt(g.scales[f]);
    sq += (fac.form == SpaceForm::FlatTorus ? fac.dim : 1) * d * d;
  }
  return std::sqrt(sq);
}

}  // namespace rflab
