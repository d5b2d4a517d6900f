#include "rflab/app.hpp"

#include "rflab/checks.hpp"
#include "rflab/config.hpp"
#include "rflab/constants.hpp"
#include "rflab/error.hpp"
#include "rflab/flow.hpp"
#include "rflab/io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>

namespace rflab {

namespace {

struct Loaded {
  ConfigFile file;
  RunConfig cfg;
};

Loaded load(const CliOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required");
  Loaded l{ConfigFile::load(opts.config), {}};
  for (const auto& o : opts.overrides) l.file.apply_override(o);
  if (opts.seed) l.file.set("run", "seed", std::to_string(*opts.seed));
  l.cfg = interpret(l.file);
  return l;
}

std::string output_format(const CliOptions& opts, const RunConfig& cfg) {
  const std::string f = opts.format ? *opts.format : cfg.output.format;
  if (f != "csv" && f != "json") throw ConfigError("output format must be csv or json, got '" + f + "'");
  return f;
}

std::string output_prefix(const CliOptions& opts, const RunConfig& cfg, const std::string& name) {
  std::filesystem::path p;
  if (opts.out) {
    p = *opts.out;
  } else {
    std::string dir = cfg.output.dir;
    if (dir.empty()) {
      const char* env = std::getenv(kOutDirEnv);
      dir = env && *env ? env : ".";
    }
    p = std::filesystem::path(dir) / name;
  }
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) {
      throw ConfigError("cannot create output directory '" + p.parent_path().string() +
                        "': " + ec.message());
    }
  }
  return p.string();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

ModelGeometry require_model(const RunConfig& cfg) {
  if (!cfg.model) throw ConfigError("missing [model] block");
  return build_model(*cfg.model);
}

Json config_echo(const ConfigFile& file) {
  Json j = Json::object();
  for (const auto& e : file.entries()) j[e.section][e.key] = e.value;
  return j;
}

Json cs0_json(const Cs0Resolution& r) {
  return {{"value", r.value},
          {"source", r.source},
          {"diam", r.diam ? Json(*r.diam) : Json(nullptr)},
          {"kappa", r.kappa}};
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? format_double(*v) : std::string();
}

struct SweepRow {
  std::string value;
  double vol = 0.0;
  std::optional<double> diam;
  double rm_norm = 0.0;
  double scalar = 0.0;
  double ric_min = 0.0;
  double ric_max = 0.0;
  double rm_n2 = 0.0;
  std::optional<double> cs_upper;
  std::optional<double> cs_lower;
  std::optional<double> theta;
  std::optional<double> sobolev_margin;
  std::optional<double> diameter_margin;
};

SweepRow sweep_point(ConfigFile file, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  file.set(key.substr(0, dot), key.substr(dot + 1), value);
  const RunConfig cfg = interpret(file);
  const ModelGeometry model = require_model(cfg);
  const MetricState g = initial_metric(model, cfg);
  const int n = model.dim();
  const CurvatureData c = curvature(model, g, SectionalSampling{0, 0});

  SweepRow row;
  row.value = value;
  row.vol = volume(model, g);
  row.diam = diameter(model, g);
  if (!row.diam) row.diam = cfg.diam_bound;
  row.rm_norm = c.rm_norm;
  row.scalar = c.scalar;
  row.ric_min = c.ric_eigenvalues()[0];
  row.ric_max = c.ric_eigenvalues()[n - 1];
  row.rm_n2 = rm_n2_norm(c, row.vol, n);
  std::optional<double> kappa;
  try {
    const Cs0Resolution r = resolve_cs0(model, g, cfg);
    row.cs_upper = r.value;
    if (r.diam) kappa = r.kappa;
  } catch (const ConfigError&) {
  }
  try {
    row.cs_lower = sobolev_lower(model, g, cfg.sobolev.family).value;
  } catch (const DomainError&) {
  }
  if (row.cs_upper) row.theta = row.rm_n2 * *row.cs_upper * *row.cs_upper;

  const double cs = row.cs_upper.value_or(1.0);
  const ConstantChain chain =
      constant_chain(cfg.primitives, n, cfg.flow.gamma, row.vol, cs, row.rm_n2,
                     scalar_negative_part_norm(c, row.vol, n), kappa);
  const CheckReport h = hypothesis_report(
      hypothesis_inputs(model, g, row.cs_upper, cfg.diam_bound, cfg.integral_variant), chain,
      cfg.primitives, cfg.integral_variant);
  if (auto it = h.metrics.find("sobolev_form.margin"); it != h.metrics.end()) {
    row.sobolev_margin = it->second;
  }
  if (auto it = h.metrics.find("diameter_form.margin"); it != h.metrics.end()) {
    row.diameter_margin = it->second;
  }
  return row;
}

struct FlowRun {
  Trajectory traj;
  Json meta;
};

FlowRun run_flow(const Loaded& l) {
  const RunConfig& cfg = l.cfg;
  const ModelGeometry model = require_model(cfg);
  const MetricState g0 = initial_metric(model, cfg);
  const Cs0Resolution cs0 = resolve_cs0(model, g0, cfg);
  cfg.primitives.validate();

  const DerivedContext ctx{cs0.value, cfg.primitives.c_n};
  Trajectory traj = integrate(model, g0, cfg.flow, ctx);
  const int n = model.dim();
  const double vol0 = volume(model, g0);

  Json meta;
  meta["model"] = to_json(model);
  meta["initial_metric"] = to_json(model, g0);
  meta["cs0"] = cs0_json(cs0);
  meta["delta0"] = traj.delta0;
  meta["gamma"] = cfg.flow.gamma;
  meta["T0"] = horizon_T0(cfg.flow.gamma, vol0, cs0.value, n);
  meta["integrator"] = to_json(traj.meta);
  meta["termination"] = to_string(traj.meta.termination);
  meta["records"] = traj.size();
  meta["primitives"] = to_json(cfg.primitives);
  meta["seed"] = cfg.seed;
  meta["config"] = config_echo(l.file);
  return {std::move(traj), std::move(meta)};
}

std::vector<CheckReport> run_checks(const Loaded& l, const CliOptions& opts) {
  const RunConfig& cfg = l.cfg;
  const ModelGeometry model = require_model(cfg);
  if (opts.trajectory.empty()) throw ConfigError("--trajectory is required");
  std::ifstream in(opts.trajectory);
  if (!in) throw ConfigError("cannot read trajectory '" + opts.trajectory + "'");
  cfg.primitives.validate();

  std::optional<Cs0Resolution> cs0;
  const Trajectory traj = read_trajectory_csv(in, model, [&](const MetricState& g) {
    cs0 = resolve_cs0(model, g, cfg);
    return DerivedContext{cs0->value, cfg.primitives.c_n};
  });

  std::set<std::string> only;
  for (const auto& c : opts.checks) {
    for (const auto& name : split_list(c, ',')) only.insert(name);
  }
  return run_suite(traj, suite_inputs(cfg, cs0->value), only);
}

Json constants_report(const RunConfig& cfg) {
  if (!cfg.has_constants) throw ConfigError("missing [constants] block");
  cfg.primitives.validate();

  std::optional<ModelGeometry> model;
  if (cfg.model) model = build_model(*cfg.model);
  int n = 0;
  if (cfg.constants_n) {
    n = *cfg.constants_n;
    if (model && model->dim() != n) {
      throw ConfigError("constants.n = " + std::to_string(n) + " disagrees with model.dim = " +
                        std::to_string(model->dim()));
    }
  } else if (model) {
    n = model->dim();
  } else {
    throw ConfigError("dimension unknown: set constants.n or a [model] block");
  }

  double vol0 = 1.0, cs0 = cfg.sobolev.cs0.value_or(1.0), rm0 = 0.0, neg0 = 0.0;
  std::optional<double> kappa;
  Json cs0_info = {{"value", cs0}, {"source", cfg.sobolev.cs0 ? "explicit" : "default"}};
  if (model) {
    const MetricState g0 = initial_metric(*model, cfg);
    const CurvatureData c = curvature(*model, g0, SectionalSampling{0, 0});
    vol0 = volume(*model, g0);
    rm0 = rm_n2_norm(c, vol0, n);
    neg0 = scalar_negative_part_norm(c, vol0, n);
    const Cs0Resolution r = resolve_cs0(*model, g0, cfg);
    cs0 = r.value;
    if (r.diam) kappa = r.kappa;
    cs0_info = cs0_json(r);
  }

  const RootResult root = solve_c_n_gamma(cfg.primitives, n, cfg.flow.gamma);
  const ConstantChain chain =
      constant_chain(cfg.primitives, n, cfg.flow.gamma, vol0, cs0, rm0, neg0, kappa);
  const MoserSchedule schedule = moser_schedule(n, cfg.moser_t_prime, cfg.moser_terms);
  const ExactMoserSums exact = exact_moser_sums(n, cfg.moser_terms);

  Json j;
  j["n"] = n;
  j["gamma"] = cfg.flow.gamma;
  j["primitives"] = to_json(cfg.primitives);
  j["cs0"] = cs0_info;
  j["root"] = {{"c_n_gamma", root.root},
               {"residual_rel", root.residual_rel},
               {"bracket_hi", root.bracket_hi},
               {"iterations", root.iterations}};
  j["chain"] = to_json(chain);
  j["moser_schedule"] = to_json(schedule);
  j["moser_exact"] = to_json(exact);
  return j;
}

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const SchemaError& e) {
    err << "error: schema mismatch (column " << e.column() << "): " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 4;
  }
}

int cmd_flow(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Loaded l = load(opts);
  const std::string format = output_format(opts, l.cfg);
  const FlowRun run = run_flow(l);
  const Trajectory& traj = run.traj;

  const std::string prefix = output_prefix(opts, l.cfg, "flow");
  const std::string data_path = prefix + (format == "json" ? ".json" : ".csv");
  {
    auto f = open_output(data_path);
    if (format == "json") {
      f << trajectory_json(traj).dump(2) << '\n';
    } else {
      write_trajectory_csv(f, traj);
    }
  }
  {
    auto f = open_output(prefix + ".meta.json");
    f << run.meta.dump(2) << '\n';
  }

  out << "flow: " << traj.size() << " records to t = " << format_double(traj.states.back().time)
      << ", termination " << to_string(traj.meta.termination) << ", wrote " << data_path << '\n';
  return 0;
}

int cmd_check(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Loaded l = load(opts);
  const RunConfig& cfg = l.cfg;
  const auto reports = run_checks(l, opts);

  const std::string prefix = output_prefix(opts, cfg, "check");
  {
    auto f = open_output(prefix + ".json");
    f << to_json(reports).dump(2) << '\n';
  }
  if (opts.format && *opts.format == "csv") {
    auto f = open_output(prefix + ".csv");
    f << "name,status,sup_ratio,fitted_constant,samples,vacuous\n";
    for (const auto& r : reports) {
      f << r.name << ',' << to_string(r.status) << ',' << opt_cell(r.sup_ratio) << ','
        << opt_cell(r.fitted_constant) << ',' << r.samples << ',' << (r.vacuous ? 1 : 0) << '\n';
    }
  } else if (opts.format && *opts.format != "json") {
    throw ConfigError("output format must be csv or json, got '" + *opts.format + "'");
  }

  bool failed = false;
  for (const auto& r : reports) {
    out << r.name << ": " << to_string(r.status);
    if (r.sup_ratio) out << " sup_ratio=" << format_double(*r.sup_ratio);
    if (r.fitted_constant) out << " fitted=" << format_double(*r.fitted_constant);
    if (r.vacuous) out << " (vacuous)";
    out << '\n';
    failed = failed || r.failed();
  }
  return failed ? 1 : 0;
}

int cmd_constants(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Loaded l = load(opts);
  const RunConfig& cfg = l.cfg;
  const std::string format = output_format(opts, cfg);
  const Json j = constants_report(cfg);

  const std::string prefix = output_prefix(opts, cfg, "constants");
  const std::string path = prefix + (format == "json" ? ".json" : ".csv");
  {
    auto f = open_output(path);
    if (format == "json") {
      f << j.dump(2) << '\n';
    } else {
      write_flat_csv(f, j);
    }
  }
  out << "constants: n = " << j["n"].get<int>()
      << ", c(n, gamma) = " << format_double(j["root"]["c_n_gamma"].get<double>())
      << ", eps(n, gamma) = " << format_double(j["chain"]["eps_n_gamma"].get<double>())
      << ", T0 = " << format_double(j["chain"]["T0"].get<double>()) << ", wrote " << path << '\n';
  return 0;
}

int cmd_sweep(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Loaded l = load(opts);
  const RunConfig& cfg = l.cfg;
  const std::string format = output_format(opts, cfg);

  std::string key;
  std::vector<std::string> values;
  if (opts.grid) {
    const auto eq = opts.grid->find('=');
    if (eq == std::string::npos) throw ConfigError("--grid must look like section.key=v1,v2,...");
    key = opts.grid->substr(0, eq);
    values = split_list(opts.grid->substr(eq + 1), ',');
  } else if (cfg.sweep) {
    key = cfg.sweep->key;
    values = cfg.sweep->values;
  } else {
    throw ConfigError("no sweep grid: pass --grid or add a [sweep] block");
  }
  const auto dot = key.find('.');
  const auto type = dot == std::string::npos
                        ? std::nullopt
                        : schema_type(key.substr(0, dot), key.substr(dot + 1));
  if (!type || *type != "real") throw ConfigError("sweep key '" + key + "' is not a real-valued config key");
  if (values.empty()) throw ConfigError("sweep grid for '" + key + "' is empty");
  require_model(cfg);

  std::vector<std::future<SweepRow>> jobs;
  for (const auto& v : values) {
    jobs.push_back(std::async(std::launch::async, sweep_point, l.file, key, v));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  const std::string prefix = output_prefix(opts, cfg, "sweep");
  const std::string path = prefix + (format == "json" ? ".json" : ".csv");
  auto f = open_output(path);
  if (format == "json") {
    Json arr = Json::array();
    auto opt = [](const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); };
    for (const auto& r : rows) {
      arr.push_back({{key, std::stod(r.value)},
                     {"vol", r.vol},
                     {"diam", opt(r.diam)},
                     {"rm_norm", r.rm_norm},
                     {"scalar_R", r.scalar},
                     {"ric_min", r.ric_min},
                     {"ric_max", r.ric_max},
                     {"rm_n2_norm", r.rm_n2},
                     {"cs_upper", opt(r.cs_upper)},
                     {"cs_lower", opt(r.cs_lower)},
                     {"theta", opt(r.theta)},
                     {"sobolev_form_margin", opt(r.sobolev_margin)},
                     {"diameter_form_margin", opt(r.diameter_margin)}});
    }
    f << arr.dump(2) << '\n';
  } else {
    f << key << ",vol,diam,rm_norm,scalar_R,ric_min,ric_max,rm_n2_norm,cs_upper,cs_lower,theta,"
                "sobolev_form_margin,diameter_form_margin\n";
    for (const auto& r : rows) {
      f << r.value << ',' << format_double(r.vol) << ',' << opt_cell(r.diam) << ','
        << format_double(r.rm_norm) << ',' << format_double(r.scalar) << ','
        << format_double(r.ric_min) << ',' << format_double(r.ric_max) << ','
        << format_double(r.rm_n2) << ',' << opt_cell(r.cs_upper) << ',' << opt_cell(r.cs_lower)
        << ',' << opt_cell(r.theta) << ',' << opt_cell(r.sobolev_margin) << ','
        << opt_cell(r.diameter_margin) << '\n';
    }
  }
  out << "sweep: " << rows.size() << " points over " << key << ", wrote " << path << '\n';
  return 0;
}

std::string flow_json(const CliOptions& opts) {
  const FlowRun run = run_flow(load(opts));
  Json j;
  j["meta"] = run.meta;
  j["trajectory"] = trajectory_json(run.traj);
  return j.dump();
}

std::string check_json(const CliOptions& opts) {
  return to_json(run_checks(load(opts), opts)).dump();
}

std::string constants_json(const CliOptions& opts) {
  return constants_report(load(opts).cfg).dump();
}

}  // namespace rflab
