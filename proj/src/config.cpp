#include "rflab/config.hpp"

#include "rflab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rflab {

namespace {

// section -> key -> type tag
const std::map<std::string, std::map<std::string, std::string>>& schema() {
  static const std::map<std::string, std::map<std::string, std::string>> s = {
      {"model",
       {{"kind", "enum:lie_group|product"},
        {"dim", "int"},
        {"brackets", "brackets"},
        {"covolume", "real"},
        {"factors", "factors"},
        {"metric", "matrix"},
        {"scales", "reals"},
        {"metric_scale", "real"},
        {"collapse", "real"},
        {"diam_bound", "real"}}},
      {"flow",
       {{"gamma", "real"},
        {"t_end", "real"},
        {"rel_tol", "real"},
        {"abs_tol", "real"},
        {"max_rm", "real"},
        {"record_every", "real"},
        {"normalize", "bool"}}},
      {"constants",
       {{"c_n", "real"},
        {"a_n", "real"},
        {"c3", "real"},
        {"gromov_ruh_eps", "real"},
        {"gallot_c0", "real"},
        {"gallot_growth", "enum:exponential|constant"},
        {"n", "int"},
        {"moser_terms", "int"},
        {"moser_t_prime", "real"},
        {"integral_eps", "real"},
        {"integral_p", "real"},
        {"integral_kappa", "real"}}},
      {"sobolev",
       {{"family", "enum:eigenfunction|bump|cap"},
        {"grid", "int"},
        {"cs0", "real"},
        {"parameters", "reals"},
        {"refine_tol", "real"}}},
      {"checks",
       {{"diameter_A", "real"},
        {"diameter_B", "real"},
        {"holder_measures", "int"},
        {"lp_p", "real"}}},
      {"output", {{"dir", "string"}, {"format", "enum:csv|json"}}},
      {"sweep", {{"key", "string"}, {"values", "reals"}}},
      {"run", {{"seed", "int"}}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string where(const ConfigEntry& e) { return e.section + "." + e.key; }

[[noreturn]] void fail(const ConfigEntry& e, const std::string& msg) {
  if (e.line == 0) throw ConfigError("override " + where(e) + ": " + msg);
  throw ConfigError(where(e) + ": " + msg, e.line);
}

double to_real(const ConfigEntry& e, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(e, "expected a real number, got '" + s + "'");
  }
  return v;
}

long long to_int(const ConfigEntry& e, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) fail(e, "expected an integer, got '" + s + "'");
  return v;
}

class Reader {
 public:
  explicit Reader(const ConfigFile& f) : f_(f) {}

  const ConfigEntry* entry(const char* section, const char* key) const {
    return f_.find(section, key);
  }

  std::optional<double> real(const char* section, const char* key) const {
    const auto* e = entry(section, key);
    if (!e) return std::nullopt;
    return to_real(*e, trim(e->value));
  }

  std::optional<long long> integer(const char* section, const char* key) const {
    const auto* e = entry(section, key);
    if (!e) return std::nullopt;
    return to_int(*e, trim(e->value));
  }

  std::optional<std::string> string(const char* section, const char* key) const {
    const auto* e = entry(section, key);
    if (!e) return std::nullopt;
    return trim(e->value);
  }

  std::optional<std::vector<double>> reals(const char* section, const char* key) const {
    const auto* e = entry(section, key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split(e->value, ';')) out.push_back(to_real(*e, item));
    return out;
  }

  // Positive real with a range message tied to the entry's line.
  std::optional<double> positive(const char* section, const char* key) const {
    auto v = real(section, key);
    if (v && !(*v > 0.0)) fail(*entry(section, key), "must be positive");
    return v;
  }

  void require(bool ok, const char* section, const char* key, const std::string& msg) const {
    if (!ok) fail(*entry(section, key), msg);
  }

 private:
  const ConfigFile& f_;
};

void check_types(const ConfigFile& file) {
  for (const auto& e : file.entries()) {
    const auto type = schema_type(e.section, e.key);
    if (!type) {
      if (schema().count(e.section) == 0) fail(e, "unknown section [" + e.section + "]");
      fail(e, "unknown key");
    }
    const std::string v = trim(e.value);
    if (*type == "real") {
      to_real(e, v);
    } else if (*type == "int") {
      to_int(e, v);
    } else if (*type == "bool") {
      if (v != "true" && v != "false") fail(e, "expected true or false, got '" + v + "'");
    } else if (type->rfind("enum:", 0) == 0) {
      const auto options = split(type->substr(5), '|');
      if (std::find(options.begin(), options.end(), v) == options.end()) {
        fail(e, "expected one of " + type->substr(5) + ", got '" + v + "'");
      }
    } else if (*type == "reals") {
      const auto items = split(e.value, ';');
      if (items.empty()) fail(e, "empty list");
      for (const auto& item : items) to_real(e, item);
    } else if (*type == "string") {
      if (v.empty()) fail(e, "empty value");
    }
  }
}

std::vector<BracketEntry> parse_brackets(const ConfigEntry& e) {
  std::vector<BracketEntry> out;
  for (const auto& item : split(e.value, ';')) {
    const auto w = words(item);
    if (w.size() != 4) fail(e, "bracket entries are 'i j k coeff', got '" + item + "'");
    BracketEntry b;
    const long long i = to_int(e, w[0]), j = to_int(e, w[1]), k = to_int(e, w[2]);
    if (i < 1 || j < 1 || k < 1) fail(e, "bracket indices are 1-based, got '" + item + "'");
    b.i = static_cast<int>(i - 1);
    b.j = static_cast<int>(j - 1);
    b.k = static_cast<int>(k - 1);
    b.coeff = to_real(e, w[3]);
    out.push_back(b);
  }
  return out;
}

std::vector<Factor> parse_factors(const ConfigEntry& e) {
  std::vector<Factor> out;
  const auto items = split(e.value, ';');
  if (items.empty()) fail(e, "empty factor list");
  for (const auto& item : items) {
    const auto w = words(item);
    if (w.size() != 3) fail(e, "factor entries are 'form dim radius', got '" + item + "'");
    Factor f;
    if (w[0] == "sphere") {
      f.form = SpaceForm::Sphere;
    } else if (w[0] == "circle") {
      f.form = SpaceForm::Circle;
    } else if (w[0] == "torus" || w[0] == "flat_torus") {
      f.form = SpaceForm::FlatTorus;
    } else {
      fail(e, "unknown space form '" + w[0] + "' (sphere, circle, torus)");
    }
    f.dim = static_cast<int>(to_int(e, w[1]));
    f.radius = to_real(e, w[2]);
    if (!(f.radius > 0.0)) fail(e, "factor radius must be positive");
    out.push_back(f);
  }
  return out;
}

Eigen::MatrixXd parse_matrix(const ConfigEntry& e) {
  const auto rows = split(e.value, ';');
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) fail(e, "empty matrix");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto w = words(rows[static_cast<std::size_t>(i)]);
    if (static_cast<Eigen::Index>(w.size()) != n) {
      fail(e, "metric must be square: row " + std::to_string(i + 1) + " has " +
                  std::to_string(w.size()) + " entries, expected " + std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = to_real(e, w[static_cast<std::size_t>(j)]);
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    fail(e, "metric must be symmetric");
  }
  return m;
}

}  // namespace

std::optional<std::string> schema_type(const std::string& section, const std::string& key) {
  const auto s = schema().find(section);
  if (s == schema().end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile f;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (schema().count(section) == 0) {
        throw ConfigError("unknown section [" + section + "]", line);
      }
      if (std::find(f.sections_.begin(), f.sections_.end(), section) == f.sections_.end()) {
        f.sections_.push_back(section);
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("key outside of any [section]", line);
    ConfigEntry e{section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("empty key", line);
    if (const auto* prev = f.find(section, e.key)) {
      throw ConfigError("duplicate key " + where(e) + " (first set on line " +
                            std::to_string(prev->line) + ")",
                        line);
    }
    if (!schema_type(section, e.key)) throw ConfigError(where(e) + ": unknown key", line);
    f.entries_.push_back(std::move(e));
  }
  return f;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
  if (!schema_type(section, key)) {
    throw ConfigError("override " + section + "." + key + ": unknown key");
  }
  for (auto& e : entries_) {
    if (e.section == section && e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  }
  entries_.push_back({section, key, value, 0});
  if (std::find(sections_.begin(), sections_.end(), section) == sections_.end()) {
    sections_.push_back(section);
  }
}

void ConfigFile::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      trim(assignment.substr(eq + 1)));
}

bool ConfigFile::has_section(const std::string& section) const {
  return std::find(sections_.begin(), sections_.end(), section) != sections_.end();
}

const ConfigEntry* ConfigFile::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.section == section && e.key == key) return &e;
  }
  return nullptr;
}

RunConfig interpret(const ConfigFile& file) {
  check_types(file);
  const Reader r(file);
  RunConfig cfg;

  if (file.has_section("model")) {
    ModelSpec spec;
    const auto kind = r.string("model", "kind");
    if (!kind) throw ConfigError("[model] block needs model.kind (lie_group or product)");
    spec.kind = *kind == "product" ? ModelKind::ProductOfSpaceForms : ModelKind::LieGroupQuotient;
    if (auto d = r.integer("model", "dim")) spec.dim = static_cast<int>(*d);
    if (spec.kind == ModelKind::LieGroupQuotient) {
      if (!r.entry("model", "dim")) throw ConfigError("lie_group model needs model.dim");
      if (const auto* e = r.entry("model", "brackets")) spec.brackets = parse_brackets(*e);
      if (auto c = r.positive("model", "covolume")) spec.covolume = *c;
      if (const auto* e = r.entry("model", "factors")) fail(*e, "only valid for product models");
      if (const auto* e = r.entry("model", "scales")) fail(*e, "only valid for product models");
      if (const auto* e = r.entry("model", "metric")) {
        cfg.metric.matrix = parse_matrix(*e);
        if (cfg.metric.matrix->rows() != spec.dim) {
          fail(*e, "metric is " + std::to_string(cfg.metric.matrix->rows()) + "x" +
                       std::to_string(cfg.metric.matrix->rows()) + " but model.dim is " +
                       std::to_string(spec.dim));
        }
      }
    } else {
      const auto* e = r.entry("model", "factors");
      if (!e) throw ConfigError("product model needs model.factors");
      spec.factors = parse_factors(*e);
      for (const char* key : {"brackets", "covolume", "metric"}) {
        if (const auto* bad = r.entry("model", key)) fail(*bad, "only valid for lie_group models");
      }
      if (const auto* s = r.entry("model", "scales")) {
        cfg.metric.scales = r.reals("model", "scales");
        if (cfg.metric.scales->size() != spec.factors.size()) {
          fail(*s, "expected one scale per factor (" + std::to_string(spec.factors.size()) + ")");
        }
        for (double v : *cfg.metric.scales) {
          if (!(v > 0.0)) fail(*s, "scales must be positive");
        }
      }
    }
    if (auto v = r.positive("model", "metric_scale")) cfg.metric.metric_scale = *v;
    cfg.metric.collapse = r.positive("model", "collapse");
    cfg.diam_bound = r.positive("model", "diam_bound");
    cfg.model = spec;
  }

  if (auto v = r.positive("flow", "gamma")) cfg.flow.gamma = *v;
  cfg.flow.t_end = r.positive("flow", "t_end");
  if (auto v = r.real("flow", "rel_tol")) {
    r.require(*v > 0.0 && *v < 1.0, "flow", "rel_tol", "must lie in (0, 1)");
    cfg.flow.rel_tol = *v;
  }
  if (auto v = r.real("flow", "abs_tol")) {
    r.require(*v > 0.0 && *v < 1.0, "flow", "abs_tol", "must lie in (0, 1)");
    cfg.flow.abs_tol = *v;
  }
  cfg.flow.max_rm = r.positive("flow", "max_rm");
  cfg.flow.record_every = r.positive("flow", "record_every");
  if (auto v = r.string("flow", "normalize")) cfg.normalize = *v == "true";

  cfg.has_constants = file.has_section("constants");
  double gallot_c0 = 1.0;
  auto growth = GallotStrategy::Growth::Exponential;
  if (auto v = r.positive("constants", "c_n")) cfg.primitives.c_n = *v;
  if (auto v = r.positive("constants", "a_n")) {
    r.require(*v >= 1.0, "constants", "a_n", "must be >= 1");
    cfg.primitives.a_n = *v;
  }
  if (auto v = r.positive("constants", "c3")) cfg.primitives.c3 = *v;
  if (auto v = r.positive("constants", "gromov_ruh_eps")) {
    r.require(*v <= 1.0, "constants", "gromov_ruh_eps", "must be <= 1");
    cfg.primitives.gromov_ruh_eps = *v;
  }
  if (auto v = r.positive("constants", "gallot_c0")) gallot_c0 = *v;
  if (auto v = r.string("constants", "gallot_growth")) {
    growth = *v == "constant" ? GallotStrategy::Growth::Constant
                              : GallotStrategy::Growth::Exponential;
  }
  cfg.primitives.gallot = GallotStrategy(gallot_c0, growth);
  if (auto v = r.integer("constants", "n")) {
    r.require(*v >= 3, "constants", "n", "must be >= 3");
    cfg.constants_n = static_cast<int>(*v);
  }
  if (auto v = r.integer("constants", "moser_terms")) {
    r.require(*v >= 1 && *v <= 4096, "constants", "moser_terms", "must lie in [1, 4096]");
    cfg.moser_terms = static_cast<int>(*v);
  }
  if (auto v = r.positive("constants", "moser_t_prime")) cfg.moser_t_prime = *v;
  cfg.integral_variant.eps = r.positive("constants", "integral_eps");
  if (auto v = r.positive("constants", "integral_p")) cfg.integral_variant.p = *v;
  if (auto v = r.real("constants", "integral_kappa")) {
    r.require(*v >= 0.0, "constants", "integral_kappa", "must be >= 0");
    cfg.integral_variant.kappa = *v;
  }

  if (auto v = r.string("sobolev", "family")) {
    cfg.sobolev.family.kind = witness_family_from_string(*v);
  }
  if (auto v = r.integer("sobolev", "grid")) {
    r.require(*v >= 512 && *v <= (1 << 22), "sobolev", "grid", "must lie in [512, 4194304]");
    cfg.sobolev.family.grid = static_cast<std::size_t>(*v);
  }
  cfg.sobolev.cs0 = r.positive("sobolev", "cs0");
  if (auto v = r.reals("sobolev", "parameters")) cfg.sobolev.family.parameters = *v;
  if (auto v = r.positive("sobolev", "refine_tol")) cfg.sobolev.family.refine_tol = *v;
  if (cfg.sobolev.family.kind != WitnessFamily::Eigenfunction) {
    for (double p : cfg.sobolev.family.parameters) {
      r.require(p > 0.0 && p <= 3.141592653589794, "sobolev", "parameters",
                "support radii must lie in (0, pi]");
    }
  }

  if (auto v = r.positive("checks", "diameter_A")) cfg.checks.diameter_A = *v;
  if (auto v = r.positive("checks", "diameter_B")) cfg.checks.diameter_B = *v;
  if (auto v = r.integer("checks", "holder_measures")) {
    r.require(*v >= 1, "checks", "holder_measures", "must be >= 1");
    cfg.checks.holder_measures = static_cast<std::size_t>(*v);
  }
  if (auto v = r.real("checks", "lp_p")) {
    r.require(*v >= 1.0, "checks", "lp_p", "must be >= 1");
    cfg.checks.lp_p = *v;
  }

  if (auto v = r.string("output", "dir")) cfg.output.dir = *v;
  if (auto v = r.string("output", "format")) cfg.output.format = *v;

  if (file.has_section("sweep")) {
    SweepSettings sw;
    const auto key = r.string("sweep", "key");
    if (!key) throw ConfigError("[sweep] block needs sweep.key");
    const auto dot = key->find('.');
    const auto type = dot == std::string::npos
                          ? std::nullopt
                          : schema_type(key->substr(0, dot), key->substr(dot + 1));
    r.require(type && *type == "real", "sweep", "key",
              "'" + *key + "' is not a real-valued config key");
    sw.key = *key;
    if (const auto* e = r.entry("sweep", "values")) {
      for (const auto& item : split(e->value, ';')) sw.values.push_back(item);
    }
    cfg.sweep = sw;
  }

  if (auto v = r.integer("run", "seed")) {
    r.require(*v >= 0, "run", "seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(*v);
  }
  return cfg;
}

MetricState initial_metric(const ModelGeometry& model, const RunConfig& cfg) {
  MetricState g = reference_metric(model);
  if (model.kind() == ModelKind::LieGroupQuotient) {
    if (cfg.metric.matrix) g.matrix = *cfg.metric.matrix;
    if (cfg.metric.collapse) {
      const int k = model.dim() - 1;
      const double c = *cfg.metric.collapse;
      g.matrix.row(k) *= c;
      g.matrix.col(k) *= c;
    }
  } else {
    if (cfg.metric.scales) g.scales = *cfg.metric.scales;
    if (cfg.metric.collapse) g.scales.back() *= *cfg.metric.collapse * *cfg.metric.collapse;
  }
  g = scale_metric(g, cfg.metric.metric_scale);
  validate_metric(model, g);
  if (cfg.normalize) g = normalize_to_unit_volume(g, model);
  g.time = 0.0;
  return g;
}

Cs0Resolution resolve_cs0(const ModelGeometry& model, const MetricState& g, const RunConfig& cfg) {
  Cs0Resolution out;
  out.diam = diameter(model, g);
  if (!out.diam) out.diam = cfg.diam_bound;
  const CurvatureData c = curvature(model, g, SectionalSampling{0, 0});
  if (out.diam) out.kappa = gallot_kappa(c, *out.diam);
  if (cfg.sobolev.cs0) {
    out.value = *cfg.sobolev.cs0;
    out.source = "explicit";
    return out;
  }
  if (!out.diam) {
    throw ConfigError(
        "Sobolev constant unavailable: set sobolev.cs0 or model.diam_bound for this model");
  }
  out.value = gallot_upper(model.dim(), out.kappa, *out.diam, volume(model, g),
                           cfg.primitives.gallot);
  out.source = "gallot";
  return out;
}

SuiteInputs suite_inputs(const RunConfig& cfg, double cs0) {
  SuiteInputs in;
  in.cs0 = cs0;
  in.gamma = cfg.flow.gamma;
  in.primitives = cfg.primitives;
  in.family = cfg.sobolev.family;
  in.diam_bound = cfg.diam_bound;
  in.diameter_A = cfg.checks.diameter_A;
  in.diameter_B = cfg.checks.diameter_B;
  in.integral_variant = cfg.integral_variant;
  in.seed = cfg.seed;
  in.holder_measures = cfg.checks.holder_measures;
  in.lp_exponent = cfg.checks.lp_p;
  return in;
}

}  // namespace rflab
