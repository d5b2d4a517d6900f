#include "rflab/checks.hpp"
#include "rflab/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rflab;
using rflab::test::kPi;

namespace {

FlowConfig span(double t_end, double record_every) {
  FlowConfig c;
  c.t_end = t_end;
  c.record_every = record_every;
  return c;
}

const Trajectory& sphere_run() {
  static const Trajectory t = [] {
    const auto s = product_model({{SpaceForm::Sphere, 3, 1.0}});
    return integrate(s, reference_metric(s), span(0.2, 1e-5));
  }();
  return t;
}

const Trajectory& heisenberg_run() {
  static const Trajectory t = [] {
    const auto h = heisenberg_model();
    return integrate(h, reference_metric(h), span(1.0, 1e-4));
  }();
  return t;
}

Trajectory almost_flat_run() {
  const auto h = heisenberg_model();
  MetricState g = reference_metric(h);
  g.matrix(2, 2) = 1e-6;  // central direction of length 1e-3
  FlowConfig cfg;
  cfg.record_every = 0.01;
  return integrate(h, g, cfg, DerivedContext{std::exp(1.0), 1.0});
}

std::vector<WeightedSample> random_measure(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> atoms(1, 10);
  std::lognormal_distribution<double> val(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.05, 2.0);
  std::vector<WeightedSample> out(static_cast<std::size_t>(atoms(rng)));
  for (auto& s : out) s = {val(rng), w(rng)};
  return out;
}

}  // namespace

TEST(Helpers, CentralDifferencesExactOnQuadratics) {
  const std::vector<double> t = {0.0, 0.1, 0.3, 0.35, 0.7};
  std::vector<double> y;
  for (double x : t) y.push_back(3.0 * x * x - x + 2.0);
  const auto d = central_differences(t, y);
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], 6.0 * t[i + 1] - 1.0, 1e-12);
  const auto d2 = central_differences(t, y, 2);
  ASSERT_EQ(d2.size(), 1u);
  EXPECT_NEAR(d2[0], 6.0 * t[2] - 1.0, 1e-12);
  EXPECT_THROW(central_differences(t, {1.0}), DimensionError);
}

TEST(Helpers, FitChangeAndKeepWorst) {
  EXPECT_DOUBLE_EQ(fit_change(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(fit_change(1.0, 0.9), 0.1 / 1.0);
  std::vector<CheckSample> s;
  for (int i = 0; i < 10; ++i) s.push_back({"x", 0.0, 0.0, 0.0, static_cast<double>(i)});
  keep_worst(s, 3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].ratio, 9.0);
  EXPECT_EQ(s[2].ratio, 7.0);
}

TEST(Helpers, NormalizedTime) {
  const auto& h = heisenberg_run();
  EXPECT_DOUBLE_EQ(normalized_time(h, 0.5), 0.5);
  const auto r = parabolic_rescale(h, 2.0);
  EXPECT_NEAR(normalized_time(r, 2.0), 0.5, 1e-14);
}

TEST(Identities, PassOnSphereAndHeisenberg) {
  for (const auto* t : {&sphere_run(), &heisenberg_run()}) {
    const auto v = check_volume_identity(*t);
    const auto s = check_scalar_identity(*t);
    EXPECT_EQ(v.status, CheckStatus::Pass) << v.metrics.at("max_residual");
    EXPECT_EQ(s.status, CheckStatus::Pass) << s.metrics.at("max_residual");
    EXPECT_LE(v.metrics.at("max_residual"), 1e-7);
    EXPECT_LE(s.metrics.at("max_residual"), 1e-7);
  }
  // Scalar-over-Rm bound is an equality on the round sphere.
  EXPECT_NEAR(check_volume_identity(sphere_run()).sup_ratio.value(), 1.0, 1e-12);
}

TEST(Identities, FailOnCorruptedTrajectory) {
  const auto& src = sphere_run();
  std::vector<MetricState> states(src.states.begin(), src.states.begin() + 200);
  states[100].scales[0] *= 1.0 + 1e-6;
  const auto bad = make_trajectory(src.model, states, src.context);
  EXPECT_EQ(check_volume_identity(bad).status, CheckStatus::Fail);
  EXPECT_EQ(check_scalar_identity(bad).status, CheckStatus::Fail);
}

TEST(Identities, VacuousOnFlatTorus) {
  const auto t = flat_torus_model(3);
  const auto traj = integrate(t, reference_metric(t), span(1.0, 0.1));
  const auto v = check_volume_identity(traj);
  EXPECT_EQ(v.status, CheckStatus::Pass);
  EXPECT_TRUE(check_scalar_identity(traj).vacuous);
  EXPECT_TRUE(check_c0_bound(traj, 1.0).vacuous);
  EXPECT_TRUE(check_lp_evolution(traj, 2.0).vacuous);
}

TEST(LpEvolution, SphereRatioClosedForm) {
  const double p = 3.0;
  const auto r = check_lp_evolution(sphere_run(), p);
  EXPECT_EQ(r.status, CheckStatus::RatioExtracted);
  EXPECT_NEAR(*r.fitted_constant, 4.0 * (p - 1.5) / (p * std::sqrt(12.0)), 1e-5);
}

TEST(LpEvolution, HeisenbergRatioIsNegativeConstant) {
  // |Rm| = |Rm|(0)/(1+3t), vol = (1+3t)^{1/6}: ratio = 3 (1/6 - p) / (p |Rm|(0)).
  const double p = 1.5;
  const double rm0 = std::sqrt(11.0) / 2.0;
  const auto r = check_lp_evolution(heisenberg_run(), p);
  EXPECT_NEAR(*r.sup_ratio, 3.0 * (1.0 / 6.0 - p) / (p * rm0), 1e-6);
  EXPECT_EQ(*r.fitted_constant, 0.0);
  EXPECT_THROW(check_lp_evolution(heisenberg_run(), 0.5), DomainError);
}

TEST(C0Bound, SphereFitMatchesClosedForm) {
  // t |Rm|(t) / (cs0^2 ||Rm||_{3/2}(0)) increases on the sphere; the fit is
  // attained at the last time t = 0.2.
  const auto r = check_c0_bound(sphere_run(), 1.0);
  const double vol0 = 2.0 * kPi * kPi;
  const double rm_end = std::sqrt(12.0) / (1.0 - 0.8);
  const double n0 = std::sqrt(12.0) * std::pow(vol0, 2.0 / 3.0);
  EXPECT_NEAR(*r.fitted_constant, rm_end * 0.2 / n0, 1e-9);
  const auto half = check_c0_bound(sphere_run(), 2.0, 0.1);
  EXPECT_NEAR(*half.fitted_constant, std::sqrt(12.0) / 0.6 * 0.1 / (4.0 * n0), 1e-9);
}

TEST(N2Bound, AlmostFlatHeisenbergPasses) {
  const auto traj = almost_flat_run();
  const double cs0 = std::exp(1.0);
  const auto chain = constant_chain(ConstantPrimitives{}, 3, 1.0, traj.derived[0].vol, cs0,
                                    traj.derived[0].rm_n2_norm);
  ASSERT_TRUE(chain.smallness_holds);
  const auto r = check_n2_bound(traj, chain);
  EXPECT_EQ(r.status, CheckStatus::Pass);
  EXPECT_LE(*r.sup_ratio, 2.0);
  const auto bad = check_n2_bound(sphere_run(), constant_chain(ConstantPrimitives{}, 3, 1.0,
                                                              2 * kPi * kPi, 1.0, 25.3));
  EXPECT_EQ(bad.status, CheckStatus::HypothesisNotMet);
}

TEST(Holder, EqualityForConstantFunctions) {
  const std::vector<WeightedSample> s = {{2.0, 0.5}, {2.0, 1.5}};
  const auto h = holder_sides(s, 2.5, 4, 1.0);
  EXPECT_NEAR(h.power_lhs / h.power_rhs, 1.0, 1e-14);
  EXPECT_NEAR(h.critical_lhs / h.critical_rhs, 1.0, 1e-14);
  EXPECT_EQ(check_holder(s, 2.5, 4, 1.0).status, CheckStatus::Pass);
}

TEST(Holder, IndependentHolderOracleOnRandomMeasures) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> pd(1.0, 6.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_measure(rng);
    const int n = 3 + trial % 6;
    const double p = pd(rng);
    // int f^{p+1} <= ||f||_{n/2} ||f^p||_{n/(n-2)} by Hoelder with exponents n/2, n/(n-2).
    double lhs = 0.0, a = 0.0, b = 0.0;
    for (const auto& x : s) {
      lhs += x.weight * std::pow(x.value, p + 1.0);
      a += x.weight * std::pow(x.value, 0.5 * n);
      b += x.weight * std::pow(x.value, p * n / (n - 2.0));
    }
    const double rhs = std::pow(a, 2.0 / n) * std::pow(b, (n - 2.0) / n);
    const auto h = holder_sides(s, p, n, 1.0);
    ASSERT_NEAR(h.power_lhs, lhs, 1e-12 * lhs);
    ASSERT_NEAR(h.power_rhs, rhs, 1e-12 * rhs);
    for (double eps : holder_epsilon_grid()) {
      const auto r = check_holder(s, p, n, eps);
      ASSERT_EQ(r.status, CheckStatus::Pass) << "trial " << trial << " eps " << eps;
    }
  }
}

TEST(Holder, DomainErrors) {
  EXPECT_THROW(holder_sides({}, 2.0, 3, 1.0), DomainError);
  EXPECT_THROW(holder_sides({{-1.0, 1.0}}, 2.0, 3, 1.0), DomainError);
  EXPECT_THROW(holder_sides({{1.0, 0.0}}, 2.0, 3, 1.0), DomainError);
  EXPECT_THROW(holder_sides({{1.0, 1.0}}, 0.5, 3, 1.0), DomainError);
  EXPECT_THROW(holder_sides({{1.0, 1.0}}, 2.0, 2, 1.0), DomainError);
}

TEST(Holder, SuiteHasNoViolations) {
  const auto reports = check_holder_suite(20211104, 1000);
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.status, CheckStatus::Pass) << r.name;
    EXPECT_GE(r.samples, 1000u) << r.name;
    EXPECT_EQ(r.metrics.at("violations"), 0.0) << r.name;
  }
  const auto again = check_holder_suite(20211104, 1000);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(*reports[i].sup_ratio, *again[i].sup_ratio);
}

TEST(Diameter, RhsClosedForm) {
  EXPECT_NEAR(diameter_bound_rhs(1.0, 1.0, 3), std::pow(2.0, 2.5) * (std::pow(2.0, 1.5) + 1.0),
              1e-12);
  EXPECT_NEAR(diameter_bound_rhs(1.0, 1.0, 3), 21.66, 5e-3);
  EXPECT_NEAR(diameter_bound_rhs(4.0, 1.0, 4), 8.0 * 5.0 * 2.0, 1e-12);
}

TEST(Diameter, UnitSpherePasses) {
  const auto s = product_model({{SpaceForm::Sphere, 3, 1.0}});
  const auto g = reference_metric(s);
  const double vol = volume(s, g);
  const auto ws = evaluate_witnesses(s, g, FamilyDescriptor{});
  const auto r = check_diameter_bound(1.0, 1.0, 3, kPi, vol, ws);
  EXPECT_EQ(r.status, CheckStatus::Pass);
  EXPECT_NEAR(r.metrics.at("lhs"), kPi / std::cbrt(2.0 * kPi * kPi), 1e-14);
  EXPECT_GE(r.metrics.at("worst_witness_margin"), 0.0);
}

TEST(Diameter, WitnessViolationIsReported) {
  const auto s = product_model({{SpaceForm::Sphere, 3, 1.0}});
  const auto g = reference_metric(s);
  const auto ws = evaluate_witnesses(s, g, FamilyDescriptor{});
  const auto r = check_diameter_bound(1e-6, 1e-6, 3, kPi, volume(s, g), ws);
  EXPECT_EQ(r.status, CheckStatus::HypothesisNotMet);
  EXPECT_EQ(check_diameter_bound(1.0, 1.0, 3, kPi, 1.0, {}).status, CheckStatus::Unavailable);
}

TEST(Hypothesis, AlmostFlatHeisenbergSatisfiesSobolevForm) {
  const auto h = heisenberg_model();
  MetricState g = reference_metric(h);
  g.matrix(2, 2) = 1e-6;
  const double cs = std::exp(1.0);
  const auto in = hypothesis_inputs(h, g, cs, 1.0);
  const auto chain = constant_chain(ConstantPrimitives{}, 3, 1.0, in.vol, cs, in.rm_n2, 0.0,
                                    gallot_kappa(curvature(h, g), 1.0));
  const auto r = hypothesis_report(in, chain, ConstantPrimitives{});
  EXPECT_EQ(r.status, CheckStatus::Pass);
  EXPECT_EQ(r.metrics.at("sobolev_form.holds"), 1.0);
  EXPECT_GT(r.metrics.at("sobolev_form.margin"), 0.0);
}

TEST(Hypothesis, RoundSphereFailsAndProductIsFlagged) {
  const auto p = product_model({{SpaceForm::Sphere, 3, 1.0}, {SpaceForm::Circle, 1, 0.01}});
  const auto g = reference_metric(p);
  const auto in = hypothesis_inputs(p, g, 10.0);
  EXPECT_TRUE(in.sphere_times_flat);
  const auto chain = constant_chain(ConstantPrimitives{}, 4, 1.0, in.vol, 10.0, in.rm_n2);
  const auto r = hypothesis_report(in, chain, ConstantPrimitives{});
  EXPECT_EQ(r.status, CheckStatus::HypothesisNotMet);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Hypothesis, IntegralVariantNeedsThreshold) {
  const auto h = heisenberg_model();
  const auto g = reference_metric(h);
  const auto chain = constant_chain(ConstantPrimitives{}, 3, 1.0, 1.0, 1.0, 1.0);
  const auto without = hypothesis_report(hypothesis_inputs(h, g, std::nullopt), chain, {});
  EXPECT_EQ(without.metrics.count("integral_ricci_form.holds"), 0u);
  IntegralVariant v;
  v.eps = 10.0;
  const auto with = hypothesis_report(hypothesis_inputs(h, g, std::nullopt, 1.0, v), chain, {}, v);
  EXPECT_EQ(with.metrics.count("integral_ricci_form.holds"), 1u);
}

TEST(Suite, NamesAreSortedAndFilterWorks) {
  const auto names = suite_check_names();
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_EQ(names.size(), 15u);
  SuiteInputs in;
  in.holder_measures = 20;
  const auto reports = run_suite(heisenberg_run(), in, {"volume_identity", "c0_bound"});
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].name, "c0_bound");
  EXPECT_EQ(reports[1].name, "volume_identity");
  EXPECT_THROW(run_suite(heisenberg_run(), in, {"no_such_check"}), ValidationError);
}

TEST(Suite, FullSuiteOnFlatTorusPassesOrIsVacuous) {
  const auto t = flat_torus_model(3);
  const auto traj = integrate(t, reference_metric(t), span(1.0, 0.1));
  SuiteInputs in;
  in.diam_bound = std::sqrt(3.0) / 2.0;
  in.holder_measures = 50;
  const auto reports = run_suite(traj, in);
  EXPECT_EQ(reports.size(), suite_check_names().size());
  for (const auto& r : reports) {
    EXPECT_NE(r.status, CheckStatus::Fail) << r.name;
    EXPECT_NE(r.status, CheckStatus::HypothesisNotMet) << r.name;
  }
}

TEST(Suite, DeterministicAcrossRuns) {
  SuiteInputs in;
  in.holder_measures = 50;
  in.diam_bound = 1.0;
  const auto a = run_suite(heisenberg_run(), in);
  const auto b = run_suite(heisenberg_run(), in);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].status, b[i].status);
    EXPECT_EQ(a[i].sup_ratio, b[i].sup_ratio);
    EXPECT_EQ(a[i].metrics, b[i].metrics);
  }
}
