#include "rflab/flow.hpp"

#include "rflab/constants.hpp"
#include "rflab/error.hpp"
#include "rflab/norms.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>

namespace rflab {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

State pack(const ModelGeometry& model, const MetricState& g) {
  if (model.kind() == ModelKind::ProductOfSpaceForms) return g.scales;
  const int n = model.dim();
  State x;
  x.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) x.push_back(g.matrix(i, j));
  return x;
}

MetricState unpack(const ModelGeometry& model, const State& x, double t) {
  MetricState g;
  g.time = t;
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    g.scales = x;
    return g;
  }
  const int n = model.dim();
  g.matrix.resize(n, n);
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      g.matrix(i, j) = x[idx];
      g.matrix(j, i) = x[idx];
      ++idx;
    }
  return g;
}

State pack_rhs(const ModelGeometry& model, const Eigen::MatrixXd& rhs) {
  if (model.kind() == ModelKind::ProductOfSpaceForms) {
    State out;
    for (int off : model.factor_offsets()) out.push_back(rhs(off, off));
    return out;
  }
  const int n = model.dim();
  State out;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.push_back(rhs(i, j));
  return out;
}

double rm_norm_of(const ModelGeometry& model, const MetricState& g) {
  return curvature(model, g, SectionalSampling{0, 0}).rm_norm;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::HorizonReached:
      return "horizon-reached";
    case Termination::CurvatureBlowup:
      return "curvature-blowup";
    case Termination::StepUnderflow:
      return "step-underflow";
  }
  return "?";
}

void FlowConfig::validate() const {
  if (!(gamma > 0.0)) throw DomainError("flow.gamma must be positive");
  if (t_end && !(*t_end > 0.0)) throw DomainError("flow.t_end must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw DomainError("flow.rel_tol must lie in (0, 1)");
  if (!(abs_tol > 0.0 && abs_tol < 1.0)) throw DomainError("flow.abs_tol must lie in (0, 1)");
  if (max_rm && !(*max_rm > 0.0)) throw DomainError("flow.max_rm must be positive");
  if (record_every && !(*record_every > 0.0)) {
    throw DomainError("flow.record_every must be positive");
  }
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.time);
  return t;
}

Eigen::MatrixXd ricci_rhs(const ModelGeometry& model, const MetricState& g) {
  return -2.0 * ricci_fixed_frame(model, g);
}

double initial_delta0(const ModelGeometry& model, const MetricState& g0, double cs0) {
  const CurvatureData c = curvature(model, g0, SectionalSampling{0, 0});
  return delta0(cs0, scalar_negative_part_norm(c, volume(model, g0), model.dim()));
}

DerivedRecord derive(const ModelGeometry& model, const MetricState& g, const DerivedContext& ctx,
                     double delta0) {
  const int n = model.dim();
  const CurvatureData c = curvature(model, g, SectionalSampling{0, 0});
  DerivedRecord r;
  r.vol = volume(model, g);
  r.rm_norm = c.rm_norm;
  r.scalar = c.scalar;
  r.ric_eigenvalues = c.ric_eigenvalues();
  r.rm_n2_norm = rm_n2_norm(c, r.vol, n);
  r.J = std::pow(c.rm_norm, 0.5 * n) * r.vol;
  r.theta = r.rm_n2_norm * ctx.cs0 * ctx.cs0;
  r.chi = ctx.c_n * std::exp(8.0 * g.time * delta0 / n) * r.rm_n2_norm;
  return r;
}

Trajectory make_trajectory(const ModelGeometry& model, std::vector<MetricState> states,
                           const DerivedContext& ctx, IntegratorStats meta) {
  if (states.empty()) throw DomainError("trajectory needs at least one state");
  Trajectory tr;
  tr.model = model;
  tr.context = ctx;
  tr.meta = meta;
  tr.delta0 = initial_delta0(model, states.front(), ctx.cs0);
  tr.derived.reserve(states.size());
  for (const auto& s : states) tr.derived.push_back(derive(model, s, ctx, tr.delta0));
  tr.states = std::move(states);
  return tr;
}

double horizon_T0(double gamma, double vol0, double cs0, int n) {
  if (!(gamma > 0.0) || !(vol0 > 0.0) || !(cs0 > 0.0)) {
    throw DomainError("horizon_T0 needs positive inputs");
  }
  return gamma * std::pow(vol0, 2.0 / n) * cs0 * cs0;
}

Trajectory integrate(const ModelGeometry& model, const MetricState& g0, const FlowConfig& cfg,
                     const DerivedContext& ctx) {
  validate_metric(model, g0);
  cfg.validate();
  if (!(ctx.cs0 > 0.0)) throw DomainError("cs0 must be positive");
  const int n = model.dim();

  const double rm0 = rm_norm_of(model, g0);
  const double t0 = g0.time;
  const double t_end =
      cfg.t_end ? *cfg.t_end : horizon_T0(cfg.gamma, volume(model, g0), ctx.cs0, n);
  const double record_every = cfg.record_every ? *cfg.record_every : t_end / 500.0;
  const double max_rm =
      cfg.max_rm ? *cfg.max_rm
                 : (rm0 > 0.0 ? 1e6 * rm0 : std::numeric_limits<double>::infinity());
  if (!(max_rm > rm0)) throw DomainError("flow.max_rm must exceed the initial |Rm|");

  IntegratorStats meta;
  meta.rel_tol = cfg.rel_tol;
  meta.abs_tol = cfg.abs_tol;
  meta.t_end = t_end;
  meta.max_rm = max_rm;
  meta.record_every = record_every;

  std::size_t rhs_calls = 0;
  auto system = [&](const State& x, State& dxdt, double t) {
    ++rhs_calls;
    const MetricState g = unpack(model, x, t);
    if (!is_positive_definite(model, g)) {
      dxdt.assign(x.size(), std::numeric_limits<double>::quiet_NaN());
      return;
    }
    dxdt = pack_rhs(model, ricci_rhs(model, g));
  };

  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol,
                                         odeint::runge_kutta_dopri5<State>());

  std::vector<MetricState> states;
  MetricState start = g0;
  start.time = t0;
  states.push_back(start);

  State x = pack(model, g0);
  double t = t0;
  double dt = record_every;
  const double span = t_end - t0;
  const auto n_records = static_cast<std::size_t>(std::ceil(span / record_every - 1e-9));
  std::size_t k = 1;
  bool last_recorded = true;

  meta.termination = Termination::HorizonReached;
  while (k <= n_records) {
    const double target = k == n_records ? t_end : t0 + static_cast<double>(k) * record_every;
    const double remaining = target - t;
    const bool clamped = dt >= remaining;
    double h = clamped ? remaining : dt;
    if (h < 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), record_every)) {
      meta.termination = Termination::StepUnderflow;
      break;
    }
    const State x_old = x;
    const double t_old = t;
    const double h_try = h;
    if (stepper.try_step(system, x, t, h) == odeint::fail) {
      ++meta.rejected;
      dt = h;
      continue;
    }
    const MetricState g = unpack(model, x, t);
    if (!is_positive_definite(model, g)) {
      x = x_old;
      t = t_old;
      dt = 0.5 * h_try;
      stepper.reset();
      ++meta.spd_rejected;
      continue;
    }
    ++meta.accepted;
    dt = h;
    last_recorded = false;
    if (clamped) {
      t = target;
      MetricState rec = unpack(model, x, t);
      states.push_back(rec);
      last_recorded = true;
      ++k;
    }
    if (rm_norm_of(model, unpack(model, x, t)) > max_rm) {
      meta.termination = Termination::CurvatureBlowup;
      break;
    }
  }
  if (!last_recorded) states.push_back(unpack(model, x, t));
  meta.rhs_evaluations = rhs_calls;
  return make_trajectory(model, std::move(states), ctx, meta);
}

Trajectory parabolic_rescale(const Trajectory& traj, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("parabolic_rescale requires lambda > 0");
  const double l2 = lambda * lambda;
  std::vector<MetricState> states;
  states.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    MetricState r = scale_metric(s, l2);
    r.time = s.time * l2;
    states.push_back(std::move(r));
  }
  IntegratorStats meta = traj.meta;
  meta.t_end *= l2;
  meta.record_every *= l2;
  meta.max_rm /= l2;
  return make_trajectory(traj.model, std::move(states), traj.context, meta);
}

MetricState normalize_to_unit_volume(const MetricState& g0, const ModelGeometry& model) {
  const double vol = volume(model, g0);
  return scale_metric(g0, std::pow(vol, -2.0 / model.dim()));
}

}  // namespace rflab
