#include "rflab/constants.hpp"

#include "rflab/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rflab {

namespace {

using Rational = boost::multiprecision::cpp_rational;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string("constants.") + name + " must be positive and finite");
  }
}

}  // namespace

void ConstantPrimitives::validate() const {
  require_positive(c_n, "c_n");
  require_positive(a_n, "a_n");
  require_positive(c3, "c3");
  require_positive(gromov_ruh_eps, "gromov_ruh_eps");
  if (a_n < 1.0) throw ConfigError("constants.a_n must be >= 1");
  if (gromov_ruh_eps > 1.0) throw ConfigError("constants.gromov_ruh_eps must be <= 1");
  if (!(gallot(3, 0.0) > 0.0)) throw ConfigError("constants.gallot_c0 must be positive");
}

double delta0(double cs0, double neg_part_norm) {
  if (!(cs0 > 0.0)) throw DomainError("delta0 requires cs0 > 0");
  return 1.0 / (cs0 * cs0) + neg_part_norm;
}

double c_n_gamma_lhs(double c_n, int n, double gamma, double x) {
  const double inner = std::exp(8.0 / n * (gamma + n * (n - 1.0) * x));
  return std::exp(2.0 * c_n * inner * x);
}

RootResult solve_c_n_gamma(const ConstantPrimitives& primitives, int n, double gamma) {
  if (n < 3) throw DomainError("c(n, gamma) requires n >= 3");
  if (!(gamma > 0.0)) throw DomainError("c(n, gamma) requires gamma > 0");
  if (!(primitives.c_n > 0.0)) throw DomainError("c(n, gamma) requires c_n > 0");
  const double target = std::ldexp(1.0, n);
  auto lhs = [&](double x) { return c_n_gamma_lhs(primitives.c_n, n, gamma, x); };

  double lo = 0.0;
  double hi = std::ldexp(1.0, -40);
  RootResult out;
  while (true) {
    const double v = lhs(hi);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "c(n, gamma) equation overflowed while bracketing: bracket (" << lo << ", " << hi
         << "]";
      throw DomainError(os.str());
    }
    if (v > target) break;
    lo = hi;
    hi *= 2.0;
  }
  out.bracket_hi = hi;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (lhs(mid) > target) {
      hi = mid;
    } else {
      lo = mid;
    }
    out.iterations = it + 1;
  }
  const double rlo = std::abs(lhs(lo) - target);
  const double rhi = std::abs(lhs(hi) - target);
  out.root = rlo <= rhi ? lo : hi;
  out.residual_rel = std::min(rlo, rhi) / target;
  return out;
}

double b_n_gamma(double c_n, int n, double gamma, double root) {
  const double first =
      std::exp(-8.0 / n * (gamma + n * (n - 1.0) * root)) / (2.0 * n * (n - 1.0) * c_n);
  return std::min(first, root / gamma);
}

double eps_n_gamma(double c_n, int n, double b) {
  return std::min({(n - 2.0) / (n * c_n), 1.0 / (n * (n - 1.0)), b});
}

ConstantChain constant_chain(const ConstantPrimitives& primitives, int n, double gamma,
                             double vol0, double cs0, double rm_n2_0, double scalar_neg_n2_0,
                             std::optional<double> kappa) {
  primitives.validate();
  if (!(vol0 > 0.0) || !(cs0 > 0.0) || !(rm_n2_0 >= 0.0) || !(scalar_neg_n2_0 >= 0.0)) {
    throw DomainError("constant_chain inputs must be positive (rm_n2_0 may be 0)");
  }
  ConstantChain ch;
  ch.n = n;
  ch.gamma = gamma;
  ch.vol0 = vol0;
  ch.cs0 = cs0;
  ch.rm_n2_0 = rm_n2_0;
  ch.scalar_neg_n2_0 = scalar_neg_n2_0;
  ch.delta0 = delta0(cs0, scalar_neg_n2_0);

  const double c = primitives.c_n;
  ch.c_n_gamma = solve_c_n_gamma(primitives, n, gamma).root;
  ch.c_n_1 = solve_c_n_gamma(primitives, n, 1.0).root;
  ch.b_n_gamma = b_n_gamma(c, n, gamma, ch.c_n_gamma);
  ch.eps_n_gamma = eps_n_gamma(c, n, ch.b_n_gamma);
  ch.eps1_n_gamma = std::min(ch.eps_n_gamma, 1.0 / primitives.c3);
  ch.eps_n_1 = eps_n_gamma(c, n, b_n_gamma(c, n, 1.0, ch.c_n_1));
  ch.eps_n_main = std::min(ch.eps_n_1, primitives.gromov_ruh_eps / (ch.c_n_1 * c));

  const double vol_factor = std::pow(vol0, 2.0 / n);
  ch.T0 = gamma * vol_factor * cs0 * cs0;
  ch.T1 = rm_n2_0 > 0.0 ? vol_factor * std::min(gamma * cs0 * cs0, ch.c_n_gamma / rm_n2_0)
                        : ch.T0;

  ch.smallness_holds = rm_n2_0 * cs0 * cs0 <= ch.eps_n_gamma;
  if (ch.smallness_holds) {
    const bool ratio_ok = rm_n2_0 == 0.0 || ch.c_n_gamma / rm_n2_0 >= gamma * cs0 * cs0;
    ch.closing_step_verified = ratio_ok && ch.T1 == ch.T0;
  }
  if (kappa) {
    ch.kappa = *kappa;
    const double gc = primitives.gallot(n, *kappa);
    ch.eps_n_kappa = ch.eps_n_main / (gc * gc);
  }
  return ch;
}

MoserSchedule moser_schedule(int n, double T_prime, int K) {
  if (n < 3) throw DomainError("Moser schedule requires n >= 3");
  if (K < 1) throw DomainError("Moser schedule requires K >= 1");
  if (!(T_prime > 0.0)) throw DomainError("Moser schedule requires T' > 0");
  MoserSchedule s;
  s.n = n;
  s.p0 = static_cast<double>(n) * n / (n - 2.0);
  s.q0 = 0.5 * s.p0;
  s.mu = 1.0 + 2.0 / n;
  s.T_prime = T_prime;

  const double a = 1.0 / s.q0;
  const double r = 1.0 / s.mu;
  s.limit_inv_q = a / (1.0 - r);
  s.limit_inv_q_next = a * r / (1.0 - r);
  s.limit_k_over_q = a * r / ((1.0 - r) * (1.0 - r));

  double s_next = 0.0, s_all = 0.0, s_k = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double qk = s.q0 * std::pow(s.mu, k);
    s.q.push_back(qk);
    s.tau.push_back((1.0 - std::pow(s.mu, -(k + 1))) * T_prime);
    s_next += 1.0 / (s.q0 * std::pow(s.mu, k + 1));
    s_all += 1.0 / qk;
    s_k += k / qk;
    s.sum_inv_q_next.push_back(s_next);
    s.sum_inv_q.push_back(s_all);
    s.sum_k_over_q.push_back(s_k);
    const double rk1 = std::pow(r, k + 1);
    s.tail_inv_q.push_back(a * rk1 / (1.0 - r));
    s.tail_inv_q_next.push_back(a * rk1 * r / (1.0 - r));
    s.tail_k_over_q.push_back(a * rk1 * ((k + 1) * (1.0 - r) + r) / ((1.0 - r) * (1.0 - r)));
  }
  const double nn = static_cast<double>(n) * n;
  s.limit_exponents.inv_q_next = (n - 2.0) / n;
  s.limit_exponents.inv_q = 1.0 - 4.0 / nn;
  s.limit_exponents.cs2_over_t = 1.0 - 4.0 / nn;
  s.limit_exponents.cs_inverse = 4.0 * (n - 2.0) / nn;
  s.limit_exponents.window = 2.0 / s.p0;
  return s;
}

ExactMoserSums exact_moser_sums(int n, int terms) {
  if (n < 3) throw DomainError("Moser sums require n >= 3");
  ExactMoserSums out;
  out.n = n;
  const Rational q0(n * n, 2 * (n - 2));
  const Rational a = 1 / q0;
  const Rational r(n, n + 2);
  const Rational sum_all = a / (1 - r);
  const Rational sum_next = a * r / (1 - r);
  out.q0 = q0.str();
  out.sum_inv_q = sum_all.str();
  out.sum_inv_q_next = sum_next.str();
  out.all_matches = sum_all == 1 - Rational(4, n * n);
  out.next_matches = sum_next == Rational(n - 2, n);

  bool ok = true;
  Rational partial_all = 0, partial_next = 0, rk = 1;
  for (int k = 0; k <= terms; ++k) {
    partial_all += a * rk;
    rk *= r;
    partial_next += a * rk;
    // rk is now r^{k+1}
    const Rational tail_all = a * rk / (1 - r);
    const Rational tail_next = a * rk * r / (1 - r);
    ok = ok && partial_all + tail_all == sum_all && partial_next + tail_next == sum_next;
  }
  out.partials_consistent = ok;
  out.checked_terms = terms;
  return out;
}

double moser_final_bound(int n, double cs, double t, double window_integral, double c_fit) {
  if (!(cs > 0.0) || !(t > 0.0) || !(c_fit > 0.0) || !(window_integral >= 0.0)) {
    throw DomainError("moser_final_bound needs cs, t, c_fit > 0 and window >= 0");
  }
  const double nn = static_cast<double>(n) * n;
  const double p0 = nn / (n - 2.0);
  return c_fit * std::pow(cs, -4.0 * (n - 2.0) / nn) * std::pow(cs * cs / t, 1.0 - 4.0 / nn) *
         std::pow(window_integral, 2.0 / p0);
}

}  // namespace rflab
