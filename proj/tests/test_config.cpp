#include "rflab/config.hpp"
#include "rflab/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rflab;

namespace {

std::string error_of(const std::string& text) {
  try {
    interpret(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int line_of(const std::string& text) {
  try {
    interpret(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const char* kHeisenberg = R"(# test
[model]
kind = lie_group
dim = 3
brackets = 1 2 3 1.0   # [e1, e2] = e3
covolume = 2.0

[flow]
gamma = 2
record_every = 0.01
)";

}  // namespace

TEST(ConfigParse, LieModel) {
  const auto cfg = interpret(ConfigFile::parse(kHeisenberg));
  ASSERT_TRUE(cfg.model.has_value());
  EXPECT_EQ(cfg.model->kind, ModelKind::LieGroupQuotient);
  EXPECT_EQ(cfg.model->dim, 3);
  ASSERT_EQ(cfg.model->brackets.size(), 1u);
  EXPECT_EQ(cfg.model->brackets[0].i, 0);
  EXPECT_EQ(cfg.model->brackets[0].k, 2);
  EXPECT_DOUBLE_EQ(cfg.model->covolume, 2.0);
  EXPECT_DOUBLE_EQ(cfg.flow.gamma, 2.0);
  EXPECT_DOUBLE_EQ(*cfg.flow.record_every, 0.01);
  EXPECT_FALSE(cfg.has_constants);
  EXPECT_EQ(cfg.seed, 20211104u);
}

TEST(ConfigParse, ProductModelAndLists) {
  const auto cfg = interpret(ConfigFile::parse(R"(
[model]
kind = product
factors = sphere 3 1.0; circle 1 0.5
scales = 2.0; 0.25
[sobolev]
family = bump
parameters = 0.5; 1.0
[run]
seed = 7
)"));
  ASSERT_EQ(cfg.model->factors.size(), 2u);
  EXPECT_EQ(cfg.model->factors[1].form, SpaceForm::Circle);
  EXPECT_DOUBLE_EQ(cfg.model->factors[1].radius, 0.5);
  EXPECT_EQ(*cfg.metric.scales, (std::vector<double>{2.0, 0.25}));
  EXPECT_EQ(cfg.sobolev.family.kind, WitnessFamily::Bump);
  EXPECT_EQ(cfg.sobolev.family.parameters.size(), 2u);
  EXPECT_EQ(cfg.seed, 7u);
}

TEST(ConfigParse, ErrorsCarryLineNumbers) {
  EXPECT_EQ(line_of("[model]\nkind = lie_group\ndim = 3\nbogus = 1\n"), 4);
  EXPECT_EQ(line_of("[nope]\nx = 1\n"), 1);
  EXPECT_EQ(line_of("[flow]\ngamma = 1\ngamma = 2\n"), 3);
  EXPECT_EQ(line_of("[flow]\n\ngamma = abc\n"), 3);
  EXPECT_EQ(line_of("[flow]\ngamma = -1\n"), 2);
  EXPECT_EQ(line_of("[flow]\nrel_tol = 2\n"), 2);
  EXPECT_EQ(line_of("key_outside = 1\n"), 1);
  EXPECT_EQ(line_of("[model]\nkind = lie_group\ndim = 3\nbrackets = 1 2\n"), 4);
  EXPECT_EQ(line_of("[model]\nkind = banana\n"), 2);
  EXPECT_NE(error_of("[flow]\ngamma = abc\n").find("line 2"), std::string::npos);
}

TEST(ConfigParse, ModelConsistency) {
  EXPECT_NE(error_of("[model]\nkind = product\n").find("factors"), std::string::npos);
  EXPECT_NE(error_of("[model]\nkind = lie_group\ndim = 3\nfactors = sphere 3 1\n").find("product"),
            std::string::npos);
  EXPECT_NE(error_of("[model]\nkind = lie_group\ndim = 3\nmetric = 1 0; 0 1\n").find("model.dim"),
            std::string::npos);
  EXPECT_NE(error_of("[model]\nkind = product\nfactors = sphere 3 1\nscales = 1; 2\n")
                .find("one scale per factor"),
            std::string::npos);
}

TEST(ConfigParse, Overrides) {
  auto f = ConfigFile::parse(kHeisenberg);
  f.apply_override("flow.gamma=3.5");
  f.apply_override("constants.c_n = 2");
  const auto cfg = interpret(f);
  EXPECT_DOUBLE_EQ(cfg.flow.gamma, 3.5);
  EXPECT_TRUE(cfg.has_constants);
  EXPECT_DOUBLE_EQ(cfg.primitives.c_n, 2.0);
  EXPECT_THROW(f.apply_override("flow.nothing=1"), ConfigError);
  EXPECT_THROW(f.apply_override("gamma=1"), ConfigError);
  auto g = ConfigFile::parse(kHeisenberg);
  g.apply_override("flow.gamma=oops");
  try {
    interpret(g);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("override flow.gamma"), std::string::npos);
  }
}

TEST(ConfigParse, SchemaTypes) {
  EXPECT_EQ(*schema_type("flow", "gamma"), "real");
  EXPECT_EQ(*schema_type("model", "dim"), "int");
  EXPECT_FALSE(schema_type("flow", "nope").has_value());
  EXPECT_NE(error_of("[sweep]\nkey = model.dim\nvalues = 1\n").find("real-valued"),
            std::string::npos);
}

TEST(ConfigParse, ConstantsBlock) {
  const auto cfg = interpret(ConfigFile::parse(R"(
[constants]
c_n = 2
a_n = 3
gallot_c0 = 1.5
gallot_growth = constant
n = 5
integral_eps = 0.1
)"));
  EXPECT_TRUE(cfg.has_constants);
  EXPECT_DOUBLE_EQ(cfg.primitives.a_n, 3.0);
  EXPECT_DOUBLE_EQ(cfg.primitives.gallot(5, 10.0), 1.5);
  EXPECT_EQ(*cfg.constants_n, 5);
  EXPECT_DOUBLE_EQ(*cfg.integral_variant.eps, 0.1);
  EXPECT_GT(line_of("[constants]\nc_n = 0\n"), 0);
  EXPECT_GT(line_of("[constants]\na_n = 0.5\n"), 0);
  EXPECT_GT(line_of("[constants]\ngromov_ruh_eps = 1.5\n"), 0);
}

TEST(InitialMetric, CollapseScaleAndNormalize) {
  auto f = ConfigFile::parse(kHeisenberg);
  f.set("model", "collapse", "0.1");
  f.set("model", "metric_scale", "4");
  auto cfg = interpret(f);
  const auto model = build_model(*cfg.model);
  const auto g = initial_metric(model, cfg);
  EXPECT_NEAR(g.matrix(0, 0), 4.0, 1e-15);
  EXPECT_NEAR(g.matrix(2, 2), 0.04, 1e-15);
  f.set("flow", "normalize", "true");
  cfg = interpret(f);
  EXPECT_NEAR(volume(model, initial_metric(model, cfg)), 1.0, 1e-14);

  const auto p = interpret(ConfigFile::parse(
      "[model]\nkind = product\nfactors = sphere 3 1; circle 1 1\ncollapse = 0.5\n"));
  const auto pm = build_model(*p.model);
  EXPECT_DOUBLE_EQ(initial_metric(pm, p).scales[1], 0.25);
}

TEST(InitialMetric, NonPositiveDefiniteMetricIsRejected) {
  auto f = ConfigFile::parse(kHeisenberg);
  f.set("model", "metric", "1 2 0; 2 1 0; 0 0 1");
  const auto cfg = interpret(f);
  EXPECT_THROW(initial_metric(build_model(*cfg.model), cfg), SpectralError);
}

TEST(Cs0, ResolutionPolicy) {
  const auto p = interpret(ConfigFile::parse("[model]\nkind = product\nfactors = sphere 3 1\n"));
  const auto pm = build_model(*p.model);
  const auto r = resolve_cs0(pm, initial_metric(pm, p), p);
  EXPECT_EQ(r.source, "gallot");
  EXPECT_NEAR(r.value, M_PI / std::cbrt(2.0 * M_PI * M_PI), 1e-14);

  auto f = ConfigFile::parse(kHeisenberg);
  const auto cfg = interpret(f);
  const auto hm = build_model(*cfg.model);
  EXPECT_THROW(resolve_cs0(hm, initial_metric(hm, cfg), cfg), ConfigError);
  f.set("model", "diam_bound", "1");
  const auto with = interpret(f);
  const auto rb = resolve_cs0(hm, initial_metric(hm, with), with);
  EXPECT_NEAR(rb.kappa, 0.5, 1e-14);  // diam^2 times -Ric_min
  f.set("sobolev", "cs0", "3");
  const auto ex = interpret(f);
  EXPECT_EQ(resolve_cs0(hm, initial_metric(hm, ex), ex).source, "explicit");
}
