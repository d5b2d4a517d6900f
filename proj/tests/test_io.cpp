#include "rflab/error.hpp"
#include "rflab/io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace rflab;

namespace {

Trajectory heisenberg_traj(const Eigen::MatrixXd& g0) {
  FlowConfig cfg;
  cfg.t_end = 0.5;
  cfg.record_every = 0.05;
  return integrate(heisenberg_model(), test::lie_metric(g0), cfg, DerivedContext{1.7, 1.3});
}

auto fixed_context(double cs0, double c_n) {
  return [=](const MetricState&) { return DerivedContext{cs0, c_n}; };
}

std::string csv_of(const Trajectory& t) {
  std::ostringstream os;
  write_trajectory_csv(os, t);
  return os.str();
}

std::string schema_column(const std::string& csv, const ModelGeometry& m) {
  std::istringstream is(csv);
  try {
    read_trajectory_csv(is, m, fixed_context(1.7, 1.3));
  } catch (const SchemaError& e) {
    return e.column();
  }
  return "";
}

std::string replace_cell(const std::string& csv, int row, int col, const std::string& v) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  int r = 0;
  while (std::getline(is, line)) {
    if (r == row) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string c;
      while (std::getline(ls, c, ',')) cells.push_back(c);
      cells[static_cast<std::size_t>(col)] = v;
      line.clear();
      for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    }
    os << line << '\n';
    ++r;
  }
  return os.str();
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(TrajectoryCsv, ColumnsAndRoundTrip) {
  std::mt19937_64 rng(12);
  const auto traj = heisenberg_traj(test::random_spd(3, rng));
  const auto cols = trajectory_columns(traj.model);
  EXPECT_EQ(cols.front(), "t");
  EXPECT_EQ(cols[1], "g_1_1");
  EXPECT_EQ(cols[6], "g_3_3");
  EXPECT_EQ(cols.back(), "ric_max");
  const std::string csv = csv_of(traj);
  std::istringstream is(csv);
  const auto back = read_trajectory_csv(is, traj.model, fixed_context(1.7, 1.3), 0.0);
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(back.states[i].time, traj.states[i].time);
    EXPECT_EQ(back.states[i].matrix, traj.states[i].matrix);
    EXPECT_EQ(back.derived[i].vol, traj.derived[i].vol);
    EXPECT_EQ(back.derived[i].rm_n2_norm, traj.derived[i].rm_n2_norm);
    EXPECT_EQ(back.derived[i].chi, traj.derived[i].chi);
  }
  EXPECT_EQ(csv_of(back), csv);
}

TEST(TrajectoryCsv, ProductRoundTrip) {
  const auto p = product_model({{SpaceForm::Sphere, 3, 1.0}, {SpaceForm::Circle, 1, 0.5}});
  FlowConfig cfg;
  cfg.t_end = 0.1;
  cfg.record_every = 0.01;
  const auto traj = integrate(p, reference_metric(p), cfg, DerivedContext{1.7, 1.3});
  const std::string csv = csv_of(traj);
  std::istringstream is(csv);
  const auto back = read_trajectory_csv(is, p, fixed_context(1.7, 1.3));
  for (std::size_t i = 0; i < traj.size(); ++i) EXPECT_EQ(back.states[i].scales, traj.states[i].scales);
}

TEST(TrajectoryCsv, SchemaErrorsNameTheColumn) {
  const auto traj = heisenberg_traj(Eigen::MatrixXd::Identity(3, 3));
  const auto m = traj.model;
  const std::string csv = csv_of(traj);
  EXPECT_EQ(schema_column("", m), "t");
  EXPECT_EQ(schema_column(replace_cell(csv, 0, 2, "g_2_1"), m), "g_2_1");
  EXPECT_EQ(schema_column(replace_cell(csv, 3, 4, "abc"), m), "g_2_2");
  EXPECT_EQ(schema_column(replace_cell(csv, 3, 0, "0.01"), m), "t");
  EXPECT_EQ(schema_column(replace_cell(csv, 3, 8, "1.5"), m), "rm_norm");
  EXPECT_EQ(schema_column(replace_cell(csv, 2, 1, "-1"), m), "g_1_1");
  const std::string truncated = csv.substr(0, csv.rfind(',', csv.size() - 2)) + "\n";
  EXPECT_EQ(schema_column(truncated, m), "ric_max");
  const auto p = product_model({{SpaceForm::Sphere, 4, 1.0}});
  EXPECT_EQ(schema_column(csv, p), "g_2_2");
}

TEST(TrajectoryCsv, ProductMatrixMustBeBlockScalar) {
  const auto p = product_model({{SpaceForm::Sphere, 2, 1.0}, {SpaceForm::Circle, 1, 1.0}});
  FlowConfig cfg;
  cfg.t_end = 0.05;
  cfg.record_every = 0.01;
  const auto traj = integrate(p, reference_metric(p), cfg, DerivedContext{1.7, 1.3});
  // g_1_2 sits at column 2
  EXPECT_FALSE(schema_column(replace_cell(csv_of(traj), 2, 2, "0.1"), p).empty());
}

TEST(Json, ReportsAndNumbers) {
  EXPECT_TRUE(number(std::nan("")).is_null());
  EXPECT_TRUE(number(INFINITY).is_null());
  EXPECT_EQ(number(1.5).get<double>(), 1.5);
  CheckReport r;
  r.name = "c0_bound";
  r.status = CheckStatus::RatioExtracted;
  r.sup_ratio = 0.25;
  r.metrics["horizon"] = 1.0;
  r.details.push_back({"t", 0.5, 1.0, 4.0, 0.25});
  const Json j = to_json(r);
  EXPECT_EQ(j["status"], "ratio-extracted");
  EXPECT_EQ(j["sup_ratio"], 0.25);
  EXPECT_TRUE(j["fitted_constant"].is_null());
  EXPECT_EQ(j["details"][0]["label"], "t");
  EXPECT_TRUE(j.contains("primitives_echo"));
}

TEST(Json, FlatCsv) {
  Json j = {{"a", 1.5}, {"b", {{"c", "x,y"}, {"d", {1, 2}}}}};
  std::ostringstream os;
  write_flat_csv(os, j);
  EXPECT_EQ(os.str(), "key,value\na,1.5\nb.c,\"x,y\"\nb.d.0,1\nb.d.1,2\n");
}

TEST(Json, ModelDescription) {
  const Json j = to_json(heisenberg_model());
  EXPECT_EQ(j["dim"], 3);
  ASSERT_EQ(j["brackets"].size(), 1u);
  EXPECT_EQ(j["brackets"][0][2], 3);
}
