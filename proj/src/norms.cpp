#include "rflab/norms.hpp"

#include "rflab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rflab {

namespace {

constexpr double kPi = std::numbers::pi;

// One-variable carrier: profiles u(phi), phi in [0, pi], integrated against
// sin^{weight_power} phi, with |grad phi|^2 = grad_factor.
struct Carrier {
  std::string name;
  int weight_power = 0;
  double grad_factor = 1.0;
};

struct Profile {
  std::string name;
  std::function<double(double)> u;
  std::function<double(double)> du;
};

std::vector<Carrier> carriers(const ModelGeometry& model, const MetricState& g) {
  std::vector<Carrier> out;
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    for (std::size_t f = 0; f < model.factors().size(); ++f) {
      const auto& fac = model.factors()[f];
      const double inv_r2 = 1.0 / g.scales[f];
      const std::string tag = to_string(fac.form) + "[" + std::to_string(f + 1) + "]";
      // circle coordinate theta in [-pi, pi]; profiles depend on |theta|
      const int power = fac.form == SpaceForm::Sphere ? fac.dim - 1 : 0;
      out.push_back({tag, power, inv_r2});
    }
    return out;
  }
  const Eigen::MatrixXd ginv = g.matrix.inverse();
  const double period = std::pow(model.covolume(), 1.0 / model.dim());
  for (int k : model.closed_directions()) {
    // theta = 2 pi x_k / period - pi, d x_k = e^k
    const double scale = 2.0 * kPi / period;
    out.push_back({"x" + std::to_string(k + 1), 0, scale * scale * ginv(k, k)});
  }
  return out;
}

std::vector<Profile> profiles(const FamilyDescriptor& family) {
  std::vector<Profile> out;
  std::vector<double> params = family.parameters;
  switch (family.kind) {
    case WitnessFamily::Eigenfunction: {
      if (params.empty()) params = {0.0, 0.25, 0.5, 1.0};
      for (double a : params) {
        std::ostringstream os;
        os << "eigenfunction(offset=" << a << ")";
        out.push_back({os.str(), [a](double x) { return a + std::cos(x); },
                       [](double x) { return -std::sin(x); }});
      }
      break;
    }
    case WitnessFamily::Bump: {
      if (params.empty()) params = {kPi / 8, kPi / 4, kPi / 2, 3 * kPi / 4, kPi};
      for (double r : params) {
        if (!(r > 0.0)) throw DomainError("bump radius must be positive");
        std::ostringstream os;
        os << "bump(radius=" << r << ")";
        out.push_back({os.str(),
                       [r](double x) {
                         if (x >= r) return 0.0;
                         const double s = 1.0 - (x / r) * (x / r);
                         return s * s;
                       },
                       [r](double x) {
                         if (x >= r) return 0.0;
                         return -4.0 * x / (r * r) * (1.0 - (x / r) * (x / r));
                       }});
      }
      break;
    }
    case WitnessFamily::Cap: {
      if (params.empty()) params = {kPi / 8, kPi / 4, kPi / 2, 3 * kPi / 4, kPi};
      for (double r : params) {
        if (!(r > 0.0)) throw DomainError("cap radius must be positive");
        std::ostringstream os;
        os << "cap(radius=" << r << ")";
        out.push_back({os.str(), [r](double x) { return x < r ? 1.0 - x / r : 0.0; },
                       [r](double x) { return x < r ? -1.0 / r : 0.0; }});
      }
      break;
    }
  }
  return out;
}

// Averages over the carrier at resolution `grid` (trapezoid on [0, pi]).
WitnessNorms evaluate(const Carrier& c, const Profile& p, double vol, int n, std::size_t grid) {
  const double q = 2.0 * n / (n - 2.0);
  double wsum = 0.0, uq = 0.0, u2 = 0.0, du2 = 0.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    const double x = kPi * static_cast<double>(i) / static_cast<double>(grid);
    double w = c.weight_power == 0 ? 1.0 : std::pow(std::sin(x), c.weight_power);
    if (i == 0 || i == grid) w *= 0.5;
    const double u = p.u(x);
    const double du = p.du(x);
    wsum += w;
    uq += w * std::pow(std::abs(u), q);
    u2 += w * u * u;
    du2 += w * du * du;
  }
  WitnessNorms out;
  out.name = p.name + " on " + c.name;
  out.critical = std::pow(vol * uq / wsum, 1.0 / q);
  out.l2 = std::sqrt(vol * u2 / wsum);
  out.grad_l2 = std::sqrt(vol * c.grad_factor * du2 / wsum);
  out.grid = grid;
  return out;
}

}  // namespace

double rm_lp_norm(const CurvatureData& curv, double vol, double p) {
  if (!(p >= 1.0)) throw DomainError("rm_lp_norm requires p >= 1");
  return curv.rm_norm * std::pow(vol, 1.0 / p);
}

double rm_n2_norm(const CurvatureData& curv, double vol, int n) {
  return curv.rm_norm * std::pow(vol, 2.0 / n);
}

double scalar_negative_part_norm(const CurvatureData& curv, double vol, int n) {
  return std::max(0.0, -curv.scalar) * std::pow(vol, 2.0 / n);
}

double integral_ricci_deficit(const CurvatureData& curv, double vol, double p, double kappa) {
  const int n = curv.ric.rows();
  if (!(p > 0.5 * n)) throw DomainError("integral_ricci_deficit requires p > n/2");
  (void)vol;  // normalized average of a constant integrand
  const double lowest = curv.ric_eigenvalues()[0];
  return std::max(0.0, kappa - lowest);
}

GallotStrategy GallotStrategy::custom(std::function<double(int, double)> fn,
                                      std::string description) {
  GallotStrategy s;
  s.custom_ = std::move(fn);
  s.custom_description_ = std::move(description);
  return s;
}

double GallotStrategy::operator()(int n, double kappa) const {
  if (custom_) return custom_(n, kappa);
  if (growth_ == Growth::Constant) return c0_;
  return c0_ * std::exp(std::sqrt((n - 1) * std::max(0.0, kappa)));
}

std::string GallotStrategy::description() const {
  if (custom_) return custom_description_;
  std::ostringstream os;
  os.precision(17);
  if (growth_ == Growth::Constant) {
    os << "c(n,kappa) = " << c0_;
  } else {
    os << "c(n,kappa) = " << c0_ << " * exp(sqrt((n-1) kappa))";
  }
  return os.str();
}

double gallot_upper(int n, double kappa, double diam, double vol, const GallotStrategy& strategy) {
  if (!(diam > 0.0) || !(vol > 0.0)) throw DomainError("gallot_upper needs diam, vol > 0");
  if (!(kappa >= 0.0)) throw DomainError("gallot_upper needs kappa >= 0");
  const double c = strategy(n, kappa);
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ConfigError("Gallot constant strategy returned a nonpositive value");
  }
  return c * diam / std::pow(vol, 1.0 / n);
}

double gallot_kappa(const CurvatureData& curv, double diam) {
  const double lowest = curv.ric_eigenvalues()[0];
  return std::max(0.0, -diam * diam * lowest);
}

std::string to_string(WitnessFamily f) {
  switch (f) {
    case WitnessFamily::Eigenfunction:
      return "eigenfunction";
    case WitnessFamily::Bump:
      return "bump";
    case WitnessFamily::Cap:
      return "cap";
  }
  return "?";
}

WitnessFamily witness_family_from_string(const std::string& s) {
  if (s == "eigenfunction") return WitnessFamily::Eigenfunction;
  if (s == "bump") return WitnessFamily::Bump;
  if (s == "cap") return WitnessFamily::Cap;
  throw ConfigError("unknown witness family '" + s + "'");
}

std::optional<double> witness_quotient(const WitnessNorms& w, double vol, int n) {
  if (!(w.grad_l2 > 0.0)) return std::nullopt;
  return (w.critical - std::pow(vol, -1.0 / n) * w.l2) / w.grad_l2;
}

std::vector<WitnessNorms> evaluate_witnesses(const ModelGeometry& model, const MetricState& g,
                                             const FamilyDescriptor& family) {
  if (family.grid < 512) throw DomainError("witness grid must have at least 512 points");
  const int n = model.dim();
  const double vol = volume(model, g);
  std::vector<WitnessNorms> out;
  constexpr std::size_t kMaxGrid = std::size_t{1} << 22;
  for (const auto& c : carriers(model, g)) {
    for (const auto& p : profiles(family)) {
      std::size_t grid = family.grid;
      WitnessNorms coarse = evaluate(c, p, vol, n, grid);
      while (true) {
        WitnessNorms fine = evaluate(c, p, vol, n, 2 * grid);
        grid *= 2;
        const auto qc = witness_quotient(coarse, vol, n);
        const auto qf = witness_quotient(fine, vol, n);
        const bool done = !qc || !qf || std::abs(*qc - *qf) <= family.refine_tol;
        coarse = fine;
        if (done || grid >= kMaxGrid) break;
      }
      out.push_back(coarse);
    }
  }
  return out;
}

SobolevLower sobolev_lower(const ModelGeometry& model, const MetricState& g,
                           const FamilyDescriptor& family) {
  const auto witnesses = evaluate_witnesses(model, g, family);
  if (witnesses.empty()) {
    throw DomainError("test-function family is empty on this model (no circle-valued coordinate)");
  }
  const double vol = volume(model, g);
  SobolevLower best;
  bool any = false;
  double raw = 0.0;
  for (const auto& w : witnesses) {
    const auto q = witness_quotient(w, vol, model.dim());
    if (!q) continue;
    if (!any || *q > raw) {
      raw = *q;
      best.witness = w.name;
      any = true;
    }
  }
  if (!any) throw DomainError("every witness in the family has zero gradient");
  best.clamped = raw < 0.0;
  best.value = std::max(0.0, raw);
  return best;
}

}  // namespace rflab
