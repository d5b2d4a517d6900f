#include "rflab/io.hpp"

#include "rflab/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace rflab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s, const std::string& column, std::size_t row) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw SchemaError("row " + std::to_string(row) + ": column '" + column +
                          "' is not a number: '" + s + "'",
                      column);
  }
  return v;
}

const char* kDerivedColumns[] = {"vol",   "rm_norm", "scalar_R", "rm_n2_norm", "J",
                                 "theta", "chi",     "ric_min",  "ric_max"};

std::vector<double> derived_values(const DerivedRecord& d) {
  return {d.vol, d.rm_norm, d.scalar, d.rm_n2_norm, d.J, d.theta, d.chi, d.ric_min(), d.ric_max()};
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "." + std::to_string(i), out);
    }
  } else {
    out.emplace_back(prefix, j);
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::vector<std::string> trajectory_columns(const ModelGeometry& model) {
  std::vector<std::string> cols = {"t"};
  const int n = model.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) cols.push_back("g_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  for (const char* c : kDerivedColumns) cols.emplace_back(c);
  return cols;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const auto cols = trajectory_columns(traj.model);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  const int n = traj.model.dim();
  for (std::size_t r = 0; r < traj.size(); ++r) {
    const Eigen::MatrixXd g = metric_matrix(traj.model, traj.states[r]);
    out << format_double(traj.states[r].time);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out << ',' << format_double(g(i, j));
    for (double v : derived_values(traj.derived[r])) out << ',' << format_double(v);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in, const ModelGeometry& model,
                               const std::function<DerivedContext(const MetricState&)>& context,
                               double tol) {
  const auto cols = trajectory_columns(model);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty trajectory file: missing header", "t");
  const auto header = split_csv(line);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c >= header.size()) throw SchemaError("missing column '" + cols[c] + "'", cols[c]);
    if (header[c] != cols[c]) {
      throw SchemaError("column " + std::to_string(c + 1) + " is '" + header[c] + "', expected '" +
                            cols[c] + "'",
                        header[c]);
    }
  }
  if (header.size() > cols.size()) {
    throw SchemaError("unexpected extra column '" + header[cols.size()] + "'", header[cols.size()]);
  }

  const int n = model.dim();
  std::vector<MetricState> states;
  std::vector<std::vector<double>> stored;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != cols.size()) {
      const std::string col = cells.size() < cols.size() ? cols[cells.size()] : "<extra>";
      throw SchemaError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(cols.size()),
                        col);
    }
    std::vector<double> v;
    for (std::size_t c = 0; c < cells.size(); ++c) v.push_back(parse_cell(cells[c], cols[c], row));
    const double t = v[0];
    if (!states.empty() && !(t > states.back().time)) {
      throw SchemaError("row " + std::to_string(row) + ": t is not strictly increasing", "t");
    }
    if (states.empty() && !(t >= 0.0)) {
      throw SchemaError("row " + std::to_string(row) + ": t must start at a nonnegative time", "t");
    }
    Eigen::MatrixXd g(n, n);
    std::size_t idx = 1;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        g(i, j) = v[idx];
        g(j, i) = v[idx];
        ++idx;
      }
    MetricState state;
    try {
      state = metric_from_matrix(model, g, t);
      validate_metric(model, state);
    } catch (const Error& e) {
      throw SchemaError("row " + std::to_string(row) + ": invalid metric: " + e.what(), cols[1]);
    }
    const Eigen::MatrixXd back = metric_matrix(model, state);
    idx = 1;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        if (back(i, j) != g(i, j)) {
          throw SchemaError("row " + std::to_string(row) + ": metric entry not representable on "
                                "this model",
                            cols[idx]);
        }
        ++idx;
      }
    states.push_back(std::move(state));
    stored.emplace_back(v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  }
  if (states.empty()) throw SchemaError("trajectory has no rows", "t");

  const DerivedContext ctx = context(states.front());
  Trajectory traj = make_trajectory(model, std::move(states), ctx);
  const std::size_t offset = cols.size() - std::size(kDerivedColumns);
  for (std::size_t r = 0; r < traj.size(); ++r) {
    const auto expect = derived_values(traj.derived[r]);
    for (std::size_t c = 0; c < expect.size(); ++c) {
      const double a = stored[r][c], b = expect[c];
      const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
      if (std::abs(a - b) > tol * scale && !(a == b)) {
        throw SchemaError("record " + std::to_string(r + 1) + ": column '" + cols[offset + c] +
                              "' is " + format_double(a) + " but recomputes to " +
                              format_double(b),
                          cols[offset + c]);
      }
    }
  }
  return traj;
}

Json to_json(const ConstantPrimitives& p) {
  Json j;
  j["c_n"] = p.c_n;
  j["a_n"] = p.a_n;
  j["c3"] = p.c3;
  j["gromov_ruh_eps"] = p.gromov_ruh_eps;
  j["gallot"] = p.gallot.description();
  return j;
}

Json to_json(const CheckReport& r) {
  Json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["sup_ratio"] = r.sup_ratio ? number(*r.sup_ratio) : Json(nullptr);
  j["fitted_constant"] = r.fitted_constant ? number(*r.fitted_constant) : Json(nullptr);
  j["samples"] = r.samples;
  j["vacuous"] = r.vacuous;
  Json metrics = Json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
  j["metrics"] = metrics;
  Json details = Json::array();
  for (const auto& s : r.details) {
    details.push_back({{"label", s.label},
                       {"t", number(s.t)},
                       {"lhs", number(s.lhs)},
                       {"rhs", number(s.rhs)},
                       {"ratio", number(s.ratio)}});
  }
  j["details"] = details;
  j["notes"] = r.notes;
  j["primitives_echo"] = to_json(r.primitives);
  return j;
}

Json to_json(const std::vector<CheckReport>& reports) {
  Json j = Json::array();
  for (const auto& r : reports) j.push_back(to_json(r));
  return j;
}

Json to_json(const ConstantChain& c) {
  Json j;
  j["n"] = c.n;
  j["gamma"] = c.gamma;
  j["vol0"] = c.vol0;
  j["cs0"] = c.cs0;
  j["rm_n2_0"] = c.rm_n2_0;
  j["scalar_neg_n2_0"] = c.scalar_neg_n2_0;
  j["delta0"] = c.delta0;
  j["c_n_gamma"] = c.c_n_gamma;
  j["c_n_1"] = c.c_n_1;
  j["b_n_gamma"] = c.b_n_gamma;
  j["eps_n_gamma"] = c.eps_n_gamma;
  j["eps1_n_gamma"] = c.eps1_n_gamma;
  j["eps_n_1"] = c.eps_n_1;
  j["eps_n_main"] = c.eps_n_main;
  j["T0"] = c.T0;
  j["T1"] = c.T1;
  j["smallness_holds"] = c.smallness_holds;
  j["closing_step_verified"] = c.closing_step_verified;
  j["kappa"] = c.kappa ? Json(*c.kappa) : Json(nullptr);
  j["eps_n_kappa"] = c.eps_n_kappa ? Json(*c.eps_n_kappa) : Json(nullptr);
  return j;
}

Json to_json(const MoserSchedule& s) {
  Json j;
  j["n"] = s.n;
  j["p0"] = s.p0;
  j["q0"] = s.q0;
  j["mu"] = s.mu;
  j["T_prime"] = s.T_prime;
  j["q"] = s.q;
  j["tau"] = s.tau;
  j["partial_sums"] = {{"inv_q_next", s.sum_inv_q_next},
                       {"inv_q", s.sum_inv_q},
                       {"k_over_q", s.sum_k_over_q}};
  j["tails"] = {{"inv_q_next", s.tail_inv_q_next},
                {"inv_q", s.tail_inv_q},
                {"k_over_q", s.tail_k_over_q}};
  j["limits"] = {{"inv_q_next", s.limit_inv_q_next},
                 {"inv_q", s.limit_inv_q},
                 {"k_over_q", s.limit_k_over_q}};
  j["limit_exponents"] = {{"inv_q_next", s.limit_exponents.inv_q_next},
                          {"inv_q", s.limit_exponents.inv_q},
                          {"cs2_over_t", s.limit_exponents.cs2_over_t},
                          {"cs_inverse", s.limit_exponents.cs_inverse},
                          {"window", s.limit_exponents.window}};
  return j;
}

Json to_json(const ExactMoserSums& s) {
  return {{"n", s.n},
          {"q0", s.q0},
          {"sum_inv_q_next", s.sum_inv_q_next},
          {"sum_inv_q", s.sum_inv_q},
          {"next_equals_(n-2)/n", s.next_matches},
          {"all_equals_1-4/n^2", s.all_matches},
          {"partials_consistent", s.partials_consistent},
          {"checked_terms", s.checked_terms}};
}

Json to_json(const IntegratorStats& s) {
  return {{"method", "dormand-prince 5(4), adaptive"},
          {"rel_tol", s.rel_tol},
          {"abs_tol", s.abs_tol},
          {"t_end", s.t_end},
          {"max_rm", number(s.max_rm)},
          {"record_every", s.record_every},
          {"accepted_steps", s.accepted},
          {"rejected_steps", s.rejected},
          {"spd_rejected_steps", s.spd_rejected},
          {"rhs_evaluations", s.rhs_evaluations},
          {"termination", to_string(s.termination)}};
}

Json to_json(const ModelGeometry& m) {
  Json j;
  j["kind"] = to_string(m.kind());
  j["dim"] = m.dim();
  if (m.kind() == ModelKind::LieGroupQuotient) {
    j["covolume"] = m.covolume();
    Json br = Json::array();
    const int n = m.dim();
    for (int i = 0; i < n; ++i)
      for (int jj = i + 1; jj < n; ++jj)
        for (int k = 0; k < n; ++k) {
          const double c = m.structure_constants()(k, i, jj);
          if (c != 0.0) br.push_back({i + 1, jj + 1, k + 1, c});
        }
    j["brackets"] = br;
  } else {
    Json fs = Json::array();
    for (const auto& f : m.factors()) {
      fs.push_back({{"form", to_string(f.form)}, {"dim", f.dim}, {"radius", f.radius}});
    }
    j["factors"] = fs;
  }
  return j;
}

Json to_json(const ModelGeometry& model, const MetricState& g) {
  Json j;
  j["time"] = g.time;
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    j["scales"] = g.scales;
  } else {
    Json rows = Json::array();
    for (int i = 0; i < g.matrix.rows(); ++i) {
      std::vector<double> row(g.matrix.cols());
      for (int c = 0; c < g.matrix.cols(); ++c) row[static_cast<std::size_t>(c)] = g.matrix(i, c);
      rows.push_back(row);
    }
    j["matrix"] = rows;
  }
  return j;
}

Json trajectory_json(const Trajectory& traj) {
  const auto cols = trajectory_columns(traj.model);
  Json arr = Json::array();
  const int n = traj.model.dim();
  for (std::size_t r = 0; r < traj.size(); ++r) {
    Json rec;
    const Eigen::MatrixXd g = metric_matrix(traj.model, traj.states[r]);
    std::size_t c = 0;
    rec[cols[c++]] = traj.states[r].time;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) rec[cols[c++]] = g(i, j);
    for (double v : derived_values(traj.derived[r])) rec[cols[c++]] = number(v);
    arr.push_back(rec);
  }
  return arr;
}

void write_flat_csv(std::ostream& out, const Json& j) {
  std::vector<std::pair<std::string, Json>> rows;
  flatten(j, "", rows);
  out << "key,value\n";
  for (const auto& [k, v] : rows) {
    std::string s;
    if (v.is_number_float()) {
      s = format_double(v.get<double>());
    } else if (v.is_string()) {
      s = v.get<std::string>();
    } else {
      s = v.dump();
    }
    out << csv_escape(k) << ',' << csv_escape(s) << '\n';
  }
}

}  // namespace rflab
