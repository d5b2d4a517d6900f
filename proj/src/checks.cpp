#include "rflab/checks.hpp"

#include "rflab/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <sstream>

namespace rflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool all_flat(const Trajectory& traj) {
  return std::all_of(traj.derived.begin(), traj.derived.end(),
                     [](const DerivedRecord& d) { return d.rm_norm == 0.0; });
}

void require_states(const Trajectory& traj, std::size_t k, const char* check) {
  if (traj.size() < k) {
    throw DomainError(std::string(check) + " needs at least " + std::to_string(k) +
                      " recorded states, got " + std::to_string(traj.size()));
  }
}

template <class F>
std::vector<double> series(const Trajectory& traj, F f) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) out.push_back(f(traj.states[i], traj.derived[i]));
  return out;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y, std::size_t upto) {
  double s = 0.0;
  for (std::size_t i = 1; i <= upto; ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Shared shape of the two differential identities.
CheckReport identity_check(const Trajectory& traj, const std::string& name,
                           const std::vector<double>& y, const std::vector<double>& expected,
                           const std::vector<double>& scale, double tol) {
  CheckReport r;
  r.name = name;
  const auto t = traj.times();
  const auto d1 = central_differences(t, y, 1);
  double worst = 0.0;
  std::vector<CheckSample> samples;
  for (std::size_t k = 0; k < d1.size(); ++k) {
    const std::size_t i = k + 1;
    const double res = std::abs(d1[k] - expected[i]) / (scale[i] + 1.0);
    worst = std::max(worst, res);
    samples.push_back({"t", t[i], d1[k], expected[i], res / tol});
  }
  r.samples = samples.size();
  r.metrics["max_residual"] = worst;
  r.metrics["tolerance"] = tol;
  if (traj.size() >= 5) {
    // Richardson: D_h - D_2h ~ 3 C h^2 estimates the truncation error of D_h.
    const auto d2 = central_differences(t, y, 2);
    double trunc = 0.0;
    for (std::size_t k = 0; k < d2.size(); ++k) {
      const std::size_t i = k + 2;
      trunc = std::max(trunc, std::abs(d1[i - 1] - d2[k]) / 3.0 / (scale[i] + 1.0));
    }
    r.metrics["richardson_truncation_estimate"] = trunc;
  }
  r.status = worst <= tol ? CheckStatus::Pass : CheckStatus::Fail;
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

struct Lcg {
  std::mt19937_64 rng;
  explicit Lcg(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
};

std::vector<WeightedSample> random_measure(Lcg& g) {
  const int atoms = g.integer(1, 12);
  std::vector<WeightedSample> m;
  std::lognormal_distribution<double> logn(0.0, 1.0);
  for (int a = 0; a < atoms; ++a) {
    const double v = g.uniform(0.0, 1.0) < 0.1 ? 0.0 : logn(g.rng);
    m.push_back({v, g.uniform(0.05, 2.0)});
  }
  return m;
}

bool within(double lhs, double rhs) { return lhs <= rhs + kHolderSlack * std::abs(rhs); }

}  // namespace

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::RatioExtracted:
      return "ratio-extracted";
    case CheckStatus::HypothesisNotMet:
      return "hypothesis-not-met";
    case CheckStatus::Unavailable:
      return "unavailable";
  }
  return "?";
}

void keep_worst(std::vector<CheckSample>& samples, std::size_t keep) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const CheckSample& a, const CheckSample& b) { return a.ratio > b.ratio; });
  if (samples.size() > keep) samples.resize(keep);
}

std::vector<double> central_differences(const std::vector<double>& t,
                                        const std::vector<double>& y, int stride) {
  if (t.size() != y.size()) throw DimensionError("central_differences: size mismatch");
  if (stride < 1) throw DomainError("central_differences: stride must be positive");
  const std::size_t s = static_cast<std::size_t>(stride);
  std::vector<double> out;
  if (t.size() < 2 * s + 1) return out;
  for (std::size_t i = s; i + s < t.size(); ++i) {
    const double h1 = t[i] - t[i - s];
    const double h2 = t[i + s] - t[i];
    out.push_back(-h2 / (h1 * (h1 + h2)) * y[i - s] + (h2 - h1) / (h1 * h2) * y[i] +
                  h1 / (h2 * (h1 + h2)) * y[i + s]);
  }
  return out;
}

double normalized_time(const Trajectory& traj, double t) {
  return t * std::pow(traj.derived.front().vol, -2.0 / traj.model.dim());
}

CheckReport check_volume_identity(const Trajectory& traj, double tol) {
  require_states(traj, 3, "volume_identity");
  const int n = traj.model.dim();
  const auto vol = series(traj, [](const MetricState&, const DerivedRecord& d) { return d.vol; });
  const auto expected = series(
      traj, [](const MetricState&, const DerivedRecord& d) { return -d.scalar * d.vol; });
  const auto scale = series(
      traj, [](const MetricState&, const DerivedRecord& d) { return std::abs(d.scalar) * d.vol; });
  CheckReport r = identity_check(traj, "volume_identity", vol, expected, scale, tol);

  // |int R| <= ||R||_{n/2} vol^{(n-2)/n} is an equality for constant R; the
  // Rm form needs |R| <= c |Rm|, with c = sqrt(n(n-1)/2) by Cauchy-Schwarz.
  const double bound = std::sqrt(0.5 * n * (n - 1.0));
  double fit = 0.0;
  for (const auto& d : traj.derived) {
    if (d.rm_norm > 0.0) fit = std::max(fit, std::abs(d.scalar) / d.rm_norm);
  }
  r.fitted_constant = fit;
  r.sup_ratio = fit / bound;
  r.metrics["scalar_over_rm_bound"] = bound;
  r.notes.push_back("equality at homogeneity for the R-norm variant of the volume-rate bound");
  r.notes.push_back("Rm-norm variant: |R| <= c |Rm| with fitted c against sqrt(n(n-1)/2)");
  if (fit > bound * (1.0 + 1e-12)) {
    r.status = CheckStatus::Fail;
    r.notes.push_back("scalar curvature exceeds the algebraic bound sqrt(n(n-1)/2) |Rm|");
  }
  if (all_flat(traj)) {
    r.vacuous = true;
    r.notes.push_back("vacuous: zero curvature throughout");
  }
  return r;
}

CheckReport check_scalar_identity(const Trajectory& traj, double tol) {
  require_states(traj, 3, "scalar_identity");
  const auto R = series(traj, [](const MetricState&, const DerivedRecord& d) { return d.scalar; });
  const auto expected = series(
      traj, [](const MetricState&, const DerivedRecord& d) { return 2.0 * d.ric_norm_squared(); });
  CheckReport r = identity_check(traj, "scalar_identity", R, expected, expected, tol);
  r.notes.push_back("spatially constant R removes the Laplacian term of the scalar evolution");
  if (all_flat(traj)) {
    r.vacuous = true;
    r.notes.push_back("vacuous: zero curvature throughout");
  }
  return r;
}

CheckReport check_n2_bound(const Trajectory& traj, const ConstantChain& chain) {
  require_states(traj, 1, "n2_bound");
  CheckReport r;
  r.name = "n2_bound";
  const double n0 = traj.derived.front().rm_n2_norm;
  const double hyp = n0 * chain.cs0 * chain.cs0;
  r.metrics["hypothesis_value"] = hyp;
  r.metrics["eps_n_gamma"] = chain.eps_n_gamma;
  r.metrics["hypothesis_margin"] = chain.eps_n_gamma - hyp;
  r.metrics["T0"] = chain.T0;

  double sup = 0.0;
  std::vector<CheckSample> samples;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.states[i].time;
    if (t > chain.T0 * (1.0 + 1e-12)) break;
    const double v = traj.derived[i].rm_n2_norm;
    const double ratio = n0 > 0.0 ? v / n0 : (v > 0.0 ? kInf : 0.0);
    sup = std::max(sup, ratio);
    samples.push_back({"t", t, v, 2.0 * n0, ratio / 2.0});
  }
  r.samples = samples.size();
  r.sup_ratio = sup;
  const double last = traj.states.back().time;
  r.metrics["covered_until"] = std::min(last, chain.T0);
  if (last < chain.T0 * (1.0 - 1e-12)) {
    r.notes.push_back("trajectory ends at t = " + fmt(last) + " (" +
                      to_string(traj.meta.termination) + ") before T0 = " + fmt(chain.T0));
  }
  if (std::abs(traj.derived.front().vol - 1.0) > 1e-12) {
    r.notes.push_back("initial volume is not 1; the statement is scale invariant and is "
                      "checked in its rescaled form");
  }
  if (n0 == 0.0 && all_flat(traj)) {
    r.status = CheckStatus::Pass;
    r.vacuous = true;
    r.notes.push_back("vacuous: zero curvature throughout (0 <= 0)");
  } else if (!chain.smallness_holds) {
    r.status = CheckStatus::HypothesisNotMet;
    r.notes.push_back("||Rm||_{n/2}(0) C_S(0)^2 = " + fmt(hyp) + " exceeds eps(n, gamma) = " +
                      fmt(chain.eps_n_gamma));
  } else {
    r.status = sup <= 2.0 * (1.0 + 1e-12) ? CheckStatus::Pass : CheckStatus::Fail;
  }
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_c0_bound(const Trajectory& traj, double cs0, std::optional<double> horizon) {
  if (!(cs0 > 0.0)) throw DomainError("c0_bound requires cs0 > 0");
  require_states(traj, 1, "c0_bound");
  CheckReport r;
  r.name = "c0_bound";
  const double h = horizon ? *horizon : traj.states.back().time;
  const double n0 = traj.derived.front().rm_n2_norm;
  r.metrics["horizon"] = h;
  std::vector<CheckSample> samples;
  double sup = 0.0;
  bool defect = false;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.states[i].time;
    if (!(t > 0.0)) continue;
    if (t > h * (1.0 + 1e-12)) break;
    const double rm = traj.derived[i].rm_norm;
    const double rhs = cs0 * cs0 * n0 / t;
    if (n0 == 0.0) {
      if (rm > 0.0) {
        defect = true;
        samples.push_back({"t", t, rm, 0.0, kInf});
      }
      continue;
    }
    const double ratio = rm / rhs;
    sup = std::max(sup, ratio);
    samples.push_back({"t", t, rm, rhs, ratio});
  }
  r.samples = samples.size();
  if (defect) {
    r.status = CheckStatus::Fail;
    r.notes.push_back("curvature appeared from an initially flat metric: integrator defect");
  } else if (n0 == 0.0) {
    r.status = CheckStatus::Pass;
    r.vacuous = true;
    r.sup_ratio = 0.0;
    r.fitted_constant = 0.0;
    r.notes.push_back("vacuous: zero curvature throughout");
  } else if (r.samples == 0) {
    r.status = CheckStatus::Unavailable;
    r.notes.push_back("no recorded state with 0 < t <= horizon");
  } else {
    r.status = CheckStatus::RatioExtracted;
    r.sup_ratio = sup;
    r.fitted_constant = sup;
    if (!std::isfinite(sup)) r.status = CheckStatus::Fail;
  }
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_lp_evolution(const Trajectory& traj, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_evolution requires p >= 1");
  require_states(traj, 3, "lp_evolution");
  CheckReport r;
  r.name = "lp_evolution";
  r.metrics["p"] = p;
  r.notes.push_back("gradient term int |grad |Rm|^{p/2}|^2 vanishes identically on homogeneous "
                    "metrics");
  const auto t = traj.times();
  const auto I = series(traj, [p](const MetricState&, const DerivedRecord& d) {
    return std::pow(d.rm_norm, p) * d.vol;
  });
  const auto dI = central_differences(t, I, 1);
  double sup = -kInf;
  std::vector<CheckSample> samples;
  for (std::size_t k = 0; k < dI.size(); ++k) {
    const auto& d = traj.derived[k + 1];
    const double denom = p * std::pow(d.rm_norm, p + 1.0) * d.vol;
    if (!(denom > 0.0)) continue;
    const double ratio = dI[k] / denom;
    sup = std::max(sup, ratio);
    samples.push_back({"t", t[k + 1], dI[k], denom, ratio});
  }
  r.samples = samples.size();
  if (samples.empty()) {
    r.status = CheckStatus::Pass;
    r.vacuous = true;
    r.sup_ratio = 0.0;
    r.fitted_constant = 0.0;
    r.notes.push_back("vacuous: numerator identically 0 (zero curvature)");
    return r;
  }
  r.status = std::isfinite(sup) ? CheckStatus::RatioExtracted : CheckStatus::Fail;
  r.sup_ratio = sup;
  r.fitted_constant = std::max(0.0, sup);
  if (sup <= 0.0) r.notes.push_back("int |Rm|^p is nonincreasing: any c >= 0 works");
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_sobolev_along_flow(const Trajectory& traj, double cs0,
                                     const ConstantPrimitives& primitives,
                                     const FamilyDescriptor& family, std::size_t max_states) {
  if (!(cs0 > 0.0)) throw DomainError("sobolev_along_flow requires cs0 > 0");
  require_states(traj, 1, "sobolev_along_flow");
  CheckReport r;
  r.name = "sobolev_along_flow";
  const int n = traj.model.dim();
  const double limit = 1.0 / (n * (n - 1.0));
  const double vol0 = traj.derived.front().vol;
  const double d0 = initial_delta0(traj.model, traj.states.front(), cs0);
  const double n0 = traj.derived.front().rm_n2_norm;
  r.metrics["delta0"] = d0;
  r.metrics["initial_condition_margin"] = limit - n0 * cs0 * cs0;

  std::vector<std::size_t> holding;
  std::optional<double> first_violation;
  double worst_condition = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double th = normalized_time(traj, traj.states[i].time);
    const double cond =
        primitives.a_n * traj.derived[i].rm_n2_norm * cs0 * cs0 * std::exp(8.0 * d0 * th / n);
    worst_condition = std::max(worst_condition, cond);
    if (cond <= limit) {
      if (!first_violation) holding.push_back(i);
    } else if (!first_violation) {
      first_violation = traj.states[i].time;
    }
  }
  r.metrics["condition_max"] = worst_condition;
  r.metrics["condition_limit"] = limit;
  if (first_violation) {
    r.metrics["first_violation_t"] = *first_violation;
    r.notes.push_back("flow-time Sobolev condition first fails at t = " + fmt(*first_violation));
  } else {
    r.notes.push_back("flow-time Sobolev condition holds on every recorded state");
  }
  if (n0 * cs0 * cs0 > limit) {
    r.status = CheckStatus::HypothesisNotMet;
    r.notes.push_back("initial condition ||Rm||_{n/2}(0) C_S(0)^2 <= 1/(n(n-1)) fails");
    return r;
  }
  if (holding.empty()) {
    r.status = CheckStatus::HypothesisNotMet;
    return r;
  }

  std::vector<std::size_t> picks;
  if (holding.size() <= max_states) {
    picks = holding;
  } else {
    for (std::size_t k = 0; k < max_states; ++k) {
      picks.push_back(holding[k * (holding.size() - 1) / (max_states - 1)]);
    }
  }
  const double lam2 = std::pow(vol0, -2.0 / n);
  double sup = 0.0;
  std::vector<CheckSample> samples;
  for (std::size_t i : picks) {
    const auto& g = traj.states[i];
    const double th = normalized_time(traj, g.time);
    const double growth = std::exp(8.0 * d0 * th / n);
    for (const auto& w : evaluate_witnesses(traj.model, g, family)) {
      const double lhs = w.critical * w.critical;
      const double rhs = growth * (cs0 * cs0 * w.grad_l2 * w.grad_l2 + lam2 * w.l2 * w.l2);
      if (!(rhs > 0.0)) continue;
      const double ratio = lhs / rhs;
      sup = std::max(sup, ratio);
      samples.push_back({w.name, g.time, lhs, rhs, ratio});
    }
  }
  r.samples = samples.size();
  if (samples.empty()) {
    r.status = CheckStatus::Unavailable;
    r.notes.push_back("no witness available on this model");
    return r;
  }
  r.status = std::isfinite(sup) ? CheckStatus::RatioExtracted : CheckStatus::Fail;
  r.sup_ratio = sup;
  r.fitted_constant = sup;
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_integral_estimates(const Trajectory& traj, double cs0,
                                     const ConstantPrimitives& primitives) {
  if (!(cs0 > 0.0)) throw DomainError("integral_estimates requires cs0 > 0");
  require_states(traj, 1, "integral_estimates");
  CheckReport r;
  r.name = "integral_estimates";
  const int n = traj.model.dim();
  const double limit = 1.0 / (n * (n - 1.0));
  const double d0 = initial_delta0(traj.model, traj.states.front(), cs0);
  const double n0 = traj.derived.front().rm_n2_norm;
  const double J0 = traj.derived.front().J;

  std::vector<double> th, weight;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    th.push_back(normalized_time(traj, traj.states[i].time));
    weight.push_back(std::exp(8.0 * th.back() * d0 / n) * traj.derived[i].rm_n2_norm);
  }
  // longest prefix on which the smallness condition holds at every time
  std::size_t prefix = 0;
  while (prefix < traj.size() && primitives.c_n * weight[prefix] * cs0 * cs0 <= limit) ++prefix;
  std::size_t energy_prefix = 0;
  while (energy_prefix < prefix &&
         traj.derived[energy_prefix].J <= std::pow(2.0, 0.5 * n) * J0 * (1.0 + 1e-12)) {
    ++energy_prefix;
  }
  r.metrics["condition_holds_until"] =
      prefix == 0 ? 0.0 : traj.states[prefix - 1].time;
  r.metrics["energy_doubling_holds_until"] =
      energy_prefix == 0 ? 0.0 : traj.states[energy_prefix - 1].time;
  if (prefix < traj.size()) {
    r.metrics["condition_first_violation_t"] = traj.states[prefix].time;
  }
  if (J0 == 0.0) {
    const bool flat = all_flat(traj);
    r.status = flat ? CheckStatus::Pass : CheckStatus::Fail;
    r.vacuous = flat;
    r.sup_ratio = 0.0;
    r.fitted_constant = 0.0;
    r.notes.push_back(flat ? "vacuous: zero curvature throughout"
                           : "energy appeared from an initially flat metric");
    return r;
  }
  if (prefix < 2) {
    r.status = CheckStatus::HypothesisNotMet;
    r.notes.push_back("smallness condition with the configured c(n) fails at t = 0 or the first "
                      "recorded time");
    return r;
  }
  double sup = -kInf, sup_lin = -kInf;
  std::vector<CheckSample> samples;
  for (std::size_t i = 1; i < prefix; ++i) {
    const double growth = std::log(traj.derived[i].J / J0);
    const double integral = trapezoid(th, weight, i);
    if (integral > 0.0) {
      const double ratio = growth / integral;
      sup = std::max(sup, ratio);
      samples.push_back({"energy-vs-integral", traj.states[i].time, growth, integral, ratio});
    }
    if (i < energy_prefix) {
      const double lin = 2.0 * std::exp(8.0 * th[i] * d0 / n) * th[i] * n0;
      if (lin > 0.0) sup_lin = std::max(sup_lin, growth / lin);
    }
  }
  r.samples = samples.size();
  r.status = CheckStatus::RatioExtracted;
  r.sup_ratio = sup;
  r.fitted_constant = std::max(0.0, sup);
  if (std::isfinite(sup_lin)) r.metrics["linearized_fit"] = sup_lin;
  r.notes.push_back("gradient-weighted monotone quantity degenerates on homogeneous metrics");
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_intermediate_time(const Trajectory& traj, double cs0) {
  if (!(cs0 > 0.0)) throw DomainError("intermediate_time requires cs0 > 0");
  require_states(traj, 1, "intermediate_time");
  CheckReport r;
  r.name = "intermediate_time";
  r.notes.push_back("reported, not asserted: the defining gradient integral vanishes at "
                    "homogeneity");
  const int n = traj.model.dim();
  const double p0 = static_cast<double>(n) * n / (n - 2.0);
  const double vol0 = traj.derived.front().vol;
  const double n0 = traj.derived.front().rm_n2_norm;
  // ||Rm||_{p0/2} of the unit-initial-volume rescaling
  std::vector<double> norm;
  for (const auto& d : traj.derived) {
    norm.push_back(d.rm_norm * std::pow(vol0, 2.0 / n) * std::pow(d.vol / vol0, 2.0 / p0));
  }
  if (n0 == 0.0) {
    r.status = all_flat(traj) ? CheckStatus::Pass : CheckStatus::Fail;
    r.vacuous = r.status == CheckStatus::Pass;
    r.sup_ratio = 0.0;
    r.fitted_constant = 0.0;
    return r;
  }
  double sup = 0.0;
  std::vector<CheckSample> samples;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double t = traj.states[i].time;
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < i; ++j) {
      const double s = traj.states[j].time;
      if (s < t / 3.0 * (1.0 - 1e-12) || s > t / 2.0 * (1.0 + 1e-12)) continue;
      if (!best || norm[j] < norm[*best]) best = j;
    }
    if (!best) continue;
    const double th = normalized_time(traj, t);
    const double rhs = n0 * std::pow(cs0 * cs0 / th + 1.0, 2.0 / n);
    const double ratio = norm[*best] / rhs;
    sup = std::max(sup, ratio);
    samples.push_back({"t*=" + fmt(traj.states[*best].time), t, norm[*best], rhs, ratio});
  }
  r.samples = samples.size();
  if (samples.empty()) {
    r.status = CheckStatus::Unavailable;
    r.notes.push_back("no recorded sample falls in any window [t/3, t/2]");
    return r;
  }
  r.status = CheckStatus::RatioExtracted;
  r.sup_ratio = sup;
  r.fitted_constant = sup;
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

CheckReport check_moser_bound(const Trajectory& traj, double cs0) {
  if (!(cs0 > 0.0)) throw DomainError("moser_bound requires cs0 > 0");
  require_states(traj, 2, "moser_bound");
  CheckReport r;
  r.name = "moser_bound";
  const int n = traj.model.dim();
  const double p0 = static_cast<double>(n) * n / (n - 2.0);
  const double mu = 1.0 + 2.0 / n;
  const auto t = traj.times();
  const auto rm = series(traj, [](const MetricState&, const DerivedRecord& d) { return d.rm_norm; });
  const auto dens = series(traj, [p0](const MetricState&, const DerivedRecord& d) {
    return std::pow(d.rm_norm, 0.5 * p0) * d.vol;
  });
  if (all_flat(traj)) {
    r.status = CheckStatus::Pass;
    r.vacuous = true;
    r.sup_ratio = 0.0;
    r.fitted_constant = 0.0;
    r.notes.push_back("vacuous: zero curvature throughout");
    return r;
  }
  auto interp = [&](const std::vector<double>& y, double s) {
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    if (it == t.begin()) return y.front();
    if (it == t.end()) return y.back();
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const double w = (s - t[j - 1]) / (t[j] - t[j - 1]);
    return (1.0 - w) * y[j - 1] + w * y[j];
  };
  double sup = 0.0;
  std::vector<CheckSample> samples;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) continue;
    const double a = (1.0 - 1.0 / mu) * t[i];
    double peak = interp(rm, a);
    double window = 0.0;
    double prev_t = a, prev_y = interp(dens, a);
    for (std::size_t j = 0; j <= i; ++j) {
      if (t[j] <= a) continue;
      peak = std::max(peak, rm[j]);
      window += 0.5 * (t[j] - prev_t) * (dens[j] + prev_y);
      prev_t = t[j];
      prev_y = dens[j];
    }
    if (!(window > 0.0)) continue;
    const double rhs = moser_final_bound(n, cs0, t[i], window, 1.0);
    const double ratio = peak / rhs;
    sup = std::max(sup, ratio);
    samples.push_back({"t", t[i], peak, rhs, ratio});
  }
  r.samples = samples.size();
  if (samples.empty()) {
    r.status = CheckStatus::Unavailable;
    return r;
  }
  r.status = std::isfinite(sup) ? CheckStatus::RatioExtracted : CheckStatus::Fail;
  r.sup_ratio = sup;
  r.fitted_constant = sup;
  keep_worst(samples);
  r.details = std::move(samples);
  return r;
}

HolderSides holder_sides(const std::vector<WeightedSample>& samples, double p, int n,
                         double epsilon) {
  if (samples.empty()) throw DomainError("holder: empty sample list");
  if (!(p >= 1.0)) throw DomainError("holder: p must be >= 1");
  if (n < 3) throw DomainError("holder: n must be >= 3");
  if (!(epsilon > 0.0)) throw DomainError("holder: epsilon must be positive");
  for (const auto& s : samples) {
    if (!(s.value >= 0.0) || !std::isfinite(s.value)) {
      throw DomainError("holder: values must be nonnegative and finite");
    }
    if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
      throw DomainError("holder: weights must be positive and finite");
    }
  }
  auto I = [&](double a) {
    double s = 0.0;
    for (const auto& x : samples) s += x.weight * std::pow(x.value, a);
    return s;
  };
  const double nd = n;
  const double p0 = nd * nd / (nd - 2.0);
  const double s = nd / (nd - 2.0);
  HolderSides h;
  h.power_lhs = I(p + 1.0);
  h.power_rhs = std::pow(I(0.5 * nd), 2.0 / nd) * std::pow(I(p * s), (nd - 2.0) / nd);
  h.critical_lhs = I(0.5 * nd + 1.0);
  h.critical_rhs = std::pow(I(0.5 * nd), 2.0 / nd) * std::pow(I(0.5 * nd * s), (nd - 2.0) / nd);
  const double r = p0 / (p0 - 2.0);
  const double I1 = I(1.0);
  const double Is = I(s);
  h.interp_lhs = std::pow(I(r), (p0 - 2.0) / p0);
  h.interp_mid = std::pow(Is, (nd - 2.0) / p0) * std::pow(I1, (p0 - nd) / p0);
  const double k = (nd - 2.0) / nd;
  h.interp_rhs = 2.0 / nd * std::pow(epsilon, -k * k) * I1 +
                 k * std::pow(epsilon, 2.0 * (nd - 2.0) / (nd * nd)) * std::pow(Is, k);
  h.moser_lhs = I(p + 1.0);
  h.moser_rhs = std::pow(I(0.5 * p0), 2.0 / p0) * std::pow(I(p * r), (p0 - 2.0) / p0);
  return h;
}

CheckReport check_holder(const std::vector<WeightedSample>& samples, double p, int n,
                         double epsilon) {
  const HolderSides h = holder_sides(samples, p, n, epsilon);
  CheckReport r;
  r.name = "holder";
  r.samples = 1;
  auto add = [&](const char* label, double lhs, double rhs) {
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 1.0);
    r.details.push_back({label, 0.0, lhs, rhs, ratio});
    r.metrics[std::string(label) + "_margin"] = rhs - lhs;
    return within(lhs, rhs);
  };
  bool ok = add("power", h.power_lhs, h.power_rhs);
  ok = add("critical", h.critical_lhs, h.critical_rhs) && ok;
  ok = add("interpolation", h.interp_lhs, h.interp_mid) && ok;
  ok = add("interpolation_young", h.interp_lhs, h.interp_rhs) && ok;
  ok = add("moser", h.moser_lhs, h.moser_rhs) && ok;
  double sup = 0.0;
  for (const auto& d : r.details) sup = std::max(sup, d.ratio);
  r.sup_ratio = sup;
  r.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  keep_worst(r.details);
  return r;
}

std::vector<double> holder_epsilon_grid() {
  std::vector<double> g;
  for (int k = -6; k <= 6; ++k) g.push_back(std::pow(10.0, 0.5 * k));
  return g;
}

std::vector<CheckReport> check_holder_suite(std::uint64_t seed, std::size_t measures,
                                            const std::vector<int>& dims) {
  struct Acc {
    CheckReport r;
    std::size_t violations = 0;
    std::vector<CheckSample> samples;
    double sup = 0.0;
  };
  Acc power, critical, interp, moser;
  power.r.name = "holder_power";
  critical.r.name = "holder_critical";
  interp.r.name = "holder_interpolation";
  moser.r.name = "holder_moser";
  const auto grid = holder_epsilon_grid();
  double closest_gap = kInf;  // smallest relative Young gap at the optimal epsilon

  auto record = [](Acc& a, const std::string& label, double lhs, double rhs) {
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 1.0);
    a.sup = std::max(a.sup, ratio);
    ++a.r.samples;
    if (!within(lhs, rhs)) ++a.violations;
    a.samples.push_back({label, 0.0, lhs, rhs, ratio});
    if (a.samples.size() > 64) keep_worst(a.samples);
  };

  Lcg g(seed);
  for (int n : dims) {
    for (std::size_t m = 0; m < measures; ++m) {
      const auto mu = random_measure(g);
      const double p = g.uniform(1.0, 6.0);
      const std::string label = "n=" + std::to_string(n) + " measure " + std::to_string(m) +
                                " atoms=" + std::to_string(mu.size()) + " p=" + fmt(p);
      HolderSides h = holder_sides(mu, p, n, 1.0);
      record(power, label, h.power_lhs, h.power_rhs);
      record(critical, label, h.critical_lhs, h.critical_rhs);
      record(moser, label, h.moser_lhs, h.moser_rhs);
      record(interp, label + " interpolation", h.interp_lhs, h.interp_mid);
      for (double eps : grid) {
        h = holder_sides(mu, p, n, eps);
        record(interp, label + " eps=" + fmt(eps), h.interp_lhs, h.interp_rhs);
      }
      // Young's inequality is tight at the optimal epsilon
      if (h.interp_mid > 0.0) {
        auto rhs_at = [&](double le) { return holder_sides(mu, p, n, std::exp(le)).interp_rhs; };
        const auto best = boost::math::tools::brent_find_minima(rhs_at, -40.0, 40.0, 40);
        closest_gap = std::min(closest_gap, (best.second - h.interp_mid) / h.interp_mid);
      }
    }
  }
  std::vector<CheckReport> out;
  for (Acc* a : {&critical, &interp, &moser, &power}) {
    a->r.status = a->violations == 0 ? CheckStatus::Pass : CheckStatus::Fail;
    a->r.sup_ratio = a->sup;
    a->r.metrics["violations"] = static_cast<double>(a->violations);
    a->r.metrics["measures"] = static_cast<double>(measures * dims.size());
    a->r.metrics["relative_slack"] = kHolderSlack;
    keep_worst(a->samples);
    a->r.details = std::move(a->samples);
    out.push_back(std::move(a->r));
  }
  out[1].metrics["optimal_epsilon_relative_gap"] = closest_gap;
  out[1].notes.push_back("near-equality of the Young step at the optimal epsilon: smallest "
                         "relative gap " + fmt(closest_gap));
  return out;
}

double diameter_bound_rhs(double A, double B, int n) {
  const double h = 0.5 * n;
  return std::pow(2.0, h + 1.0) * (std::pow(2.0, h) * std::pow(B, h) + 1.0) * std::sqrt(A / B);
}

CheckReport check_diameter_bound(double A, double B, int n, double diam, double vol,
                                 const std::vector<WitnessNorms>& witnesses) {
  if (!(A > 0.0) || !(B > 0.0)) throw DomainError("diameter_bound requires A, B > 0");
  if (!(diam > 0.0) || !(vol > 0.0)) throw DomainError("diameter_bound requires diam, vol > 0");
  if (n < 3) throw DomainError("diameter_bound requires n >= 3");
  CheckReport r;
  r.name = "diameter_bound";
  r.metrics["A"] = A;
  r.metrics["B"] = B;
  const double lhs = diam / std::pow(vol, 1.0 / n);
  const double rhs = diameter_bound_rhs(A, B, n);
  r.metrics["lhs"] = lhs;
  r.metrics["rhs"] = rhs;
  if (witnesses.empty()) {
    r.status = CheckStatus::Unavailable;
    r.notes.push_back("no witness available to validate the Sobolev inequality with (A, B)");
    return r;
  }
  double worst = kInf;
  std::string worst_name;
  std::vector<CheckSample> samples;
  for (const auto& w : witnesses) {
    const double wl = w.critical * w.critical;
    const double wr = A * w.grad_l2 * w.grad_l2 + B * std::pow(vol, -2.0 / n) * w.l2 * w.l2;
    const double margin = (wr - wl) / wr;
    if (margin < worst) {
      worst = margin;
      worst_name = w.name;
    }
    samples.push_back({w.name, 0.0, wl, wr, wl / wr});
  }
  r.samples = samples.size();
  r.metrics["worst_witness_margin"] = worst;
  r.notes.push_back("worst witness: " + worst_name);
  r.notes.push_back("witness validation is necessary, not sufficient, for the Sobolev "
                    "inequality with (A, B)");
  keep_worst(samples);
  r.details = std::move(samples);
  if (worst < -1e-12) {
    r.status = CheckStatus::HypothesisNotMet;
    r.notes.push_back("witness " + worst_name + " violates the Sobolev inequality with (A, B)");
    return r;
  }
  r.sup_ratio = lhs / rhs;
  r.status = lhs <= rhs ? CheckStatus::Pass : CheckStatus::Fail;
  if (r.status == CheckStatus::Fail) r.details.insert(r.details.begin(), {"diameter", 0.0, lhs, rhs, lhs / rhs});
  return r;
}

CheckReport hypothesis_report(const HypothesisInputs& in, const ConstantChain& chain,
                              const ConstantPrimitives& primitives,
                              const IntegralVariant& variant) {
  CheckReport r;
  r.name = "hypothesis";
  r.primitives = primitives;
  const int n = in.n;
  int available = 0, holding = 0;
  const std::string conclusion =
      "the criterion then asserts M is diffeomorphic to an infranil manifold (reported "
      "implication, not a computed fact)";

  auto verdict = [&](const std::string& key, double value, double threshold) {
    const bool holds = value <= threshold;
    r.metrics[key + ".value"] = value;
    r.metrics[key + ".threshold"] = threshold;
    r.metrics[key + ".margin"] = threshold - value;
    r.metrics[key + ".holds"] = holds ? 1.0 : 0.0;
    ++available;
    if (holds) {
      ++holding;
      r.notes.push_back(key + ": hypothesis holds; " + conclusion);
    } else {
      r.notes.push_back(key + ": hypothesis fails by " + fmt(value - threshold));
    }
  };

  // ||Rm||_{n/2} C_S^2 <= eps_n; an upper bound for C_S keeps the verdict sound
  if (in.cs_upper) {
    verdict("sobolev_form", in.rm_n2 * *in.cs_upper * *in.cs_upper, chain.eps_n_main);
  } else {
    r.notes.push_back("sobolev_form: unavailable (no Sobolev constant upper bound)");
  }

  if (in.diam) {
    const double kappa = std::max(0.0, -*in.diam * *in.diam * in.ric_min);
    const double gc = primitives.gallot(n, kappa);
    const double ratio = *in.diam / std::pow(in.vol, 1.0 / n);
    r.metrics["diameter_form.kappa"] = kappa;
    r.metrics["diameter_form.gallot_constant"] = gc;
    verdict("diameter_form", in.rm_n2 * ratio * ratio, chain.eps_n_main / (gc * gc));
  } else {
    r.notes.push_back("diameter_form: unavailable (diameter unknown; configure a diameter bound)");
  }

  if (variant.eps && in.ricci_deficit) {
    const double eps = *variant.eps;
    const double value = std::max(*in.ricci_deficit, in.rm_norm);
    r.metrics["integral_ricci_form.deficit"] = *in.ricci_deficit;
    r.metrics["integral_ricci_form.normalized_rm"] = in.rm_norm;
    r.metrics["integral_ricci_form.p"] = variant.p > 0.0 ? variant.p : n;
    r.metrics["integral_ricci_form.kappa"] = variant.kappa;
    if (in.diam) r.metrics["integral_ricci_form.diameter"] = *in.diam;
    verdict("integral_ricci_form", value, eps);
  } else {
    r.notes.push_back("integral_ricci_form: unavailable (threshold eps(n, p, kappa, D) not "
                      "configured)");
  }

  r.notes.push_back("Gallot constant: " + primitives.gallot.description());
  if (in.sphere_times_flat) {
    r.notes.push_back("sphere x flat products: the universal cover is not diffeomorphic to R^n, "
                      "so no infranil criterion can hold on this family; small ||Rm||_{n/2} "
                      "alone is not enough");
  }
  r.samples = static_cast<std::size_t>(available);
  if (available == 0) {
    r.status = CheckStatus::Unavailable;
  } else {
    r.status = holding > 0 ? CheckStatus::Pass : CheckStatus::HypothesisNotMet;
  }
  return r;
}

HypothesisInputs hypothesis_inputs(const ModelGeometry& model, const MetricState& g,
                                   std::optional<double> cs_upper,
                                   std::optional<double> diam_bound,
                                   const IntegralVariant& variant) {
  const CurvatureData c = curvature(model, g, SectionalSampling{0, 0});
  HypothesisInputs in;
  in.n = model.dim();
  in.vol = volume(model, g);
  in.rm_n2 = rm_n2_norm(c, in.vol, in.n);
  in.rm_norm = c.rm_norm;
  in.ric_min = c.ric_eigenvalues()[0];
  in.cs_upper = cs_upper;
  in.diam = diameter(model, g);
  if (!in.diam) in.diam = diam_bound;
  const double p = variant.p > 0.0 ? variant.p : static_cast<double>(in.n);
  in.ricci_deficit = integral_ricci_deficit(c, in.vol, p, variant.kappa);
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    bool sphere = false, flat = false;
    for (const auto& f : model.factors()) {
      (f.form == SpaceForm::Sphere ? sphere : flat) = true;
    }
    in.sphere_times_flat = sphere && flat;
  }
  return in;
}

double fit_change(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

std::vector<std::string> suite_check_names() {
  std::vector<std::string> names = {
      "c0_bound",          "diameter_bound",     "holder_critical",   "holder_interpolation",
      "holder_moser",      "holder_power",       "hypothesis",        "integral_estimates",
      "intermediate_time", "lp_evolution",       "moser_bound",       "n2_bound",
      "scalar_identity",   "sobolev_along_flow", "volume_identity"};
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<CheckReport> run_suite(const Trajectory& traj, const SuiteInputs& in,
                                   const std::set<std::string>& only) {
  const auto names = suite_check_names();
  for (const auto& s : only) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw ValidationError("unknown check '" + s + "'");
    }
  }
  auto selected = [&](const std::string& s) { return only.empty() || only.count(s) > 0; };
  require_states(traj, 1, "check suite");

  const ModelGeometry& model = traj.model;
  const MetricState& g0 = traj.states.front();
  const int n = model.dim();
  const DerivedRecord& d0 = traj.derived.front();
  const CurvatureData c0 = curvature(model, g0, SectionalSampling{0, 0});
  std::optional<double> diam = diameter(model, g0);
  if (!diam) diam = in.diam_bound;
  std::optional<double> kappa;
  if (diam) kappa = gallot_kappa(c0, *diam);
  const ConstantChain chain =
      constant_chain(in.primitives, n, in.gamma, d0.vol, in.cs0, d0.rm_n2_norm,
                     scalar_negative_part_norm(c0, d0.vol, n), kappa);
  const double horizon = std::min(chain.T0, traj.states.back().time);

  using Job = std::function<std::vector<CheckReport>()>;
  auto one = [](std::function<CheckReport()> f) -> Job {
    return [f]() { return std::vector<CheckReport>{f()}; };
  };
  std::vector<std::pair<std::string, Job>> jobs;
  jobs.emplace_back("volume_identity", one([&] { return check_volume_identity(traj); }));
  jobs.emplace_back("scalar_identity", one([&] { return check_scalar_identity(traj); }));
  jobs.emplace_back("n2_bound", one([&] { return check_n2_bound(traj, chain); }));
  jobs.emplace_back("c0_bound", one([&] { return check_c0_bound(traj, in.cs0, horizon); }));
  jobs.emplace_back("lp_evolution", one([&] { return check_lp_evolution(traj, in.lp_exponent.value_or(0.5 * n)); }));
  jobs.emplace_back("sobolev_along_flow", one([&] {
                      return check_sobolev_along_flow(traj, in.cs0, in.primitives, in.family);
                    }));
  jobs.emplace_back("integral_estimates",
                    one([&] { return check_integral_estimates(traj, in.cs0, in.primitives); }));
  jobs.emplace_back("intermediate_time", one([&] { return check_intermediate_time(traj, in.cs0); }));
  jobs.emplace_back("moser_bound", one([&] { return check_moser_bound(traj, in.cs0); }));
  jobs.emplace_back("hypothesis", one([&] {
                      return hypothesis_report(
                          hypothesis_inputs(model, g0, in.cs0, in.diam_bound, in.integral_variant),
                          chain, in.primitives, in.integral_variant);
                    }));
  jobs.emplace_back("diameter_bound", one([&] {
                      if (!diam) {
                        CheckReport r;
                        r.name = "diameter_bound";
                        r.status = CheckStatus::Unavailable;
                        r.notes.push_back("diameter unknown; configure a diameter bound");
                        return r;
                      }
                      return check_diameter_bound(in.diameter_A, in.diameter_B, n, *diam, d0.vol,
                                                  evaluate_witnesses(model, g0, in.family));
                    }));
  jobs.emplace_back("holder", [&] { return check_holder_suite(in.seed, in.holder_measures); });

  std::vector<std::pair<std::string, std::future<std::vector<CheckReport>>>> running;
  for (auto& [name, job] : jobs) {
    const bool wanted = name == "holder" ? (selected("holder_critical") ||
                                            selected("holder_interpolation") ||
                                            selected("holder_moser") || selected("holder_power"))
                                         : selected(name);
    if (!wanted) continue;
    running.emplace_back(name, std::async(std::launch::async, job));
  }
  std::vector<CheckReport> out;
  for (auto& [name, fut] : running) {
    std::vector<CheckReport> reports;
    try {
      reports = fut.get();
    } catch (const Error& e) {
      CheckReport r;
      r.name = name;
      r.status = CheckStatus::Unavailable;
      r.notes.push_back(e.what());
      reports.push_back(std::move(r));
    }
    for (auto& r : reports) {
      if (!selected(r.name)) continue;
      r.primitives = in.primitives;
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
  return out;
}

}  // namespace rflab
