#include "rflab/error.hpp"
#include "rflab/norms.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rflab;
using rflab::test::kPi;

namespace {

ModelGeometry unit_s3() { return product_model({{SpaceForm::Sphere, 3, 1.0}}); }

// Average of |cos|^q over a period.
double cos_moment(double q) {
  return std::tgamma(0.5 * (q + 1.0)) / (std::sqrt(kPi) * std::tgamma(0.5 * q + 1.0));
}

}  // namespace

TEST(Norms, SphereCriticalNorm) {
  const auto m = unit_s3();
  const auto g = reference_metric(m);
  const auto c = curvature(m, g);
  const double vol = 2.0 * kPi * kPi;
  const double expected = std::sqrt(12.0) * std::pow(vol, 2.0 / 3.0);
  EXPECT_NEAR(rm_lp_norm(c, vol, 1.5), expected, 1e-11);
  EXPECT_NEAR(rm_n2_norm(c, vol, 3), expected, 1e-11);
  EXPECT_NEAR(expected, 25.30, 5e-3);
  EXPECT_THROW(rm_lp_norm(c, vol, 0.5), DomainError);
}

TEST(Norms, FlatTorusNormsVanish) {
  const auto m = flat_torus_model(4);
  const auto c = curvature(m, reference_metric(m));
  EXPECT_EQ(rm_lp_norm(c, 1.0, 2.0), 0.0);
  EXPECT_EQ(scalar_negative_part_norm(c, 1.0, 4), 0.0);
}

TEST(Norms, ScalarNegativePart) {
  const auto h = heisenberg_model();
  const auto g = scale_metric(reference_metric(h), 4.0);
  const auto c = curvature(h, g);
  const double vol = volume(h, g);
  EXPECT_NEAR(vol, 8.0, 1e-12);
  EXPECT_NEAR(scalar_negative_part_norm(c, vol, 3), 0.125 * std::pow(8.0, 2.0 / 3.0), 1e-13);
  const auto s = unit_s3();
  EXPECT_EQ(scalar_negative_part_norm(curvature(s, reference_metric(s)), 1.0, 3), 0.0);
}

TEST(Norms, IntegralRicciDeficit) {
  const auto h = heisenberg_model();
  const auto c = curvature(h, reference_metric(h));
  EXPECT_NEAR(integral_ricci_deficit(c, 1.0, 3.0, 0.0), 0.5, 1e-14);
  EXPECT_NEAR(integral_ricci_deficit(c, 1.0, 3.0, 0.25), 0.75, 1e-14);
  EXPECT_THROW(integral_ricci_deficit(c, 1.0, 1.5, 0.0), DomainError);
  const auto s = unit_s3();
  EXPECT_EQ(integral_ricci_deficit(curvature(s, reference_metric(s)), 1.0, 2.0, 0.0), 0.0);
}

TEST(Gallot, DefaultStrategyOnUnitSphere) {
  const double vol = 2.0 * kPi * kPi;
  const double v = gallot_upper(3, 0.0, kPi, vol, GallotStrategy{});
  EXPECT_NEAR(v, kPi / std::cbrt(vol), 1e-14);
  EXPECT_NEAR(v, 1.1624, 1e-4);
}

TEST(Gallot, GrowthIsMonotoneInKappa) {
  const GallotStrategy s{2.0, GallotStrategy::Growth::Exponential};
  EXPECT_DOUBLE_EQ(s(4, 0.0), 2.0);
  EXPECT_NEAR(s(4, 3.0), 2.0 * std::exp(3.0), 1e-12);
  double prev = 0.0;
  for (double k = 0.0; k < 10.0; k += 0.5) {
    EXPECT_GE(s(3, k), prev);
    prev = s(3, k);
  }
  const GallotStrategy flat{1.5, GallotStrategy::Growth::Constant};
  EXPECT_DOUBLE_EQ(flat(3, 100.0), 1.5);
  EXPECT_NE(s.description().find("exp"), std::string::npos);
}

TEST(Gallot, CustomStrategyAndErrors) {
  const auto s = GallotStrategy::custom([](int n, double k) { return n + k; }, "n + kappa");
  EXPECT_DOUBLE_EQ(s(3, 1.0), 4.0);
  EXPECT_EQ(s.description(), "n + kappa");
  EXPECT_THROW(gallot_upper(3, -1.0, 1.0, 1.0, s), DomainError);
  EXPECT_THROW(gallot_upper(3, 0.0, 0.0, 1.0, s), DomainError);
  const auto bad = GallotStrategy::custom([](int, double) { return -1.0; }, "negative");
  EXPECT_THROW(gallot_upper(3, 0.0, 1.0, 1.0, bad), ConfigError);
}

TEST(Gallot, KappaFromRicciLowerBound) {
  const auto h = heisenberg_model();
  const auto c = curvature(h, reference_metric(h));
  EXPECT_NEAR(gallot_kappa(c, 2.0), 2.0, 1e-14);
  const auto s = unit_s3();
  EXPECT_EQ(gallot_kappa(curvature(s, reference_metric(s)), kPi), 0.0);
}

TEST(Witnesses, CircleEigenfunctionMatchesClosedForm) {
  const double r = 0.5;
  const auto m = product_model({{SpaceForm::Sphere, 3, 1.0}, {SpaceForm::Circle, 1, r}});
  const auto g = reference_metric(m);
  const double vol = volume(m, g);
  FamilyDescriptor fam;
  fam.parameters = {0.0};
  fam.refine_tol = 1e-12;
  const auto ws = evaluate_witnesses(m, g, fam);
  ASSERT_EQ(ws.size(), 2u);
  const auto& w = ws[1];  // circle carrier
  EXPECT_NE(w.name.find("circle"), std::string::npos);
  const double q = 4.0;  // 2n/(n-2), n = 4
  EXPECT_NEAR(w.l2, std::sqrt(vol / 2.0), 1e-10 * w.l2);
  EXPECT_NEAR(w.grad_l2, std::sqrt(vol / 2.0) / r, 1e-10 * w.grad_l2);
  EXPECT_NEAR(w.critical, std::pow(vol * cos_moment(q), 1.0 / q), 1e-9 * w.critical);
}

TEST(Witnesses, SphereFirstEigenfunction) {
  const auto m = unit_s3();
  const auto g = scale_metric(reference_metric(m), 4.0);
  const double vol = volume(m, g);
  FamilyDescriptor fam;
  fam.parameters = {0.0};
  fam.refine_tol = 1e-12;
  const auto ws = evaluate_witnesses(m, g, fam);
  ASSERT_EQ(ws.size(), 1u);
  // On S^d: mean of cos^2 is 1/(d+1), mean of |grad cos|^2 is d/((d+1) r^2).
  EXPECT_NEAR(ws[0].l2, std::sqrt(vol / 4.0), 1e-10 * ws[0].l2);
  EXPECT_NEAR(ws[0].grad_l2, std::sqrt(vol * 3.0 / 4.0 / 4.0), 1e-10 * ws[0].grad_l2);
}

TEST(Witnesses, LieWitnessesUseClosedDirections) {
  const auto h = heisenberg_model();
  const auto ws = evaluate_witnesses(h, reference_metric(h), FamilyDescriptor{});
  // two closed directions times four default offsets
  EXPECT_EQ(ws.size(), 8u);
  for (const auto& w : ws) EXPECT_EQ(w.name.find("x3"), std::string::npos);
  EXPECT_THROW(sobolev_lower(su2_model(), reference_metric(su2_model()), FamilyDescriptor{}),
               DomainError);
}

TEST(Witnesses, LowerBoundIsScaleInvariant) {
  const auto m = product_model({{SpaceForm::Sphere, 3, 1.0}, {SpaceForm::Circle, 1, 0.3}});
  const auto g = reference_metric(m);
  for (auto kind : {WitnessFamily::Eigenfunction, WitnessFamily::Bump, WitnessFamily::Cap}) {
    FamilyDescriptor fam;
    fam.kind = kind;
    const auto a = sobolev_lower(m, g, fam);
    const auto b = sobolev_lower(m, scale_metric(g, 100.0), fam);
    EXPECT_NEAR(a.value, b.value, 1e-6 * (1.0 + a.value)) << to_string(kind);
    EXPECT_GE(a.value, 0.0);
  }
}

TEST(Witnesses, LowerBoundBelowGallotUpperOnSpheres) {
  const auto m = unit_s3();
  const auto g = reference_metric(m);
  FamilyDescriptor fam;
  fam.kind = WitnessFamily::Bump;
  const auto lo = sobolev_lower(m, g, fam);
  const double up = gallot_upper(3, 0.0, kPi, volume(m, g), GallotStrategy{});
  SobolevEstimate est{up, lo.value, 0.0, lo.witness};
  EXPECT_TRUE(est.consistent());
  SobolevEstimate bad{0.1, 0.2, 0.0, ""};
  EXPECT_FALSE(bad.consistent());
}

TEST(Witnesses, FamilyNamesRoundTrip) {
  for (auto k : {WitnessFamily::Eigenfunction, WitnessFamily::Bump, WitnessFamily::Cap}) {
    EXPECT_EQ(witness_family_from_string(to_string(k)), k);
  }
  EXPECT_THROW(witness_family_from_string("gaussian"), ConfigError);
  FamilyDescriptor small;
  small.grid = 16;
  const auto m = unit_s3();
  EXPECT_THROW(evaluate_witnesses(m, reference_metric(m), small), DomainError);
}
