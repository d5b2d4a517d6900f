#pragma once

// Explicit constants, thresholds and the Moser iteration schedule of the
// small-curvature Ricci flow estimates.
//
// The universal constants that are only known to exist (c(n), a_n, c_3(n,
// gamma), the Gallot constant, the Gromov-Ruh epsilon_n) are configuration:
// ConstantPrimitives. Everything else is derived from them deterministically.

#include "rflab/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rflab {

struct ConstantPrimitives {
  double c_n = 1.0;
  double a_n = 1.0;
  double c3 = 1.0;
  double gromov_ruh_eps = 1.0;
  GallotStrategy gallot;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

/// C_S(0)^{-2} + ||(R - alpha)^-||_{n/2}(0).
double delta0(double cs0, double neg_part_norm);

/// exp(2 c(n) e^{(8/n)(gamma + n(n-1) x)} x), the left side of the defining
/// equation of c(n, gamma). Strictly increasing in x >= 0.
double c_n_gamma_lhs(double c_n, int n, double gamma, double x);

struct RootResult {
  double root = 0.0;
  double residual_rel = 0.0;  ///< |LHS(root) - 2^n| / 2^n
  double bracket_hi = 0.0;
  int iterations = 0;
};

/// Unique root of LHS(x) = 2^n, by bracketing bisection on (0, x_hi] with
/// x_hi doubled until LHS(x_hi) > 2^n.
RootResult solve_c_n_gamma(const ConstantPrimitives& primitives, int n, double gamma);

struct ConstantChain {
  // inputs
  int n = 0;
  double gamma = 0.0;
  double vol0 = 0.0;
  double cs0 = 0.0;
  double rm_n2_0 = 0.0;
  double scalar_neg_n2_0 = 0.0;

  double delta0 = 0.0;
  double c_n_gamma = 0.0;   ///< root for this gamma
  double c_n_1 = 0.0;       ///< root for gamma = 1
  double b_n_gamma = 0.0;
  double eps_n_gamma = 0.0;
  double eps1_n_gamma = 0.0;
  double eps_n_1 = 0.0;     ///< eps(n, 1)
  double eps_n_main = 0.0;  ///< threshold of the main L^{n/2} flatness statement
  double T0 = 0.0;
  double T1 = 0.0;
  /// rm_n2_0 * cs0^2 <= eps(n, gamma)
  bool smallness_holds = false;
  /// If smallness holds: c(n,gamma)/rm_n2_0 >= gamma cs0^2 and T1 == T0.
  bool closing_step_verified = false;
  /// eps(n, kappa) = c(n, kappa)^{-2} eps_n, present when kappa was supplied.
  std::optional<double> kappa;
  std::optional<double> eps_n_kappa;
};

ConstantChain constant_chain(const ConstantPrimitives& primitives, int n, double gamma,
                             double vol0, double cs0, double rm_n2_0,
                             double scalar_neg_n2_0 = 0.0,
                             std::optional<double> kappa = std::nullopt);

/// b(n, gamma) from c(n) and the root x = c(n, gamma).
double b_n_gamma(double c_n, int n, double gamma, double root);
/// eps(n, gamma) = min{(n-2)/(n c(n)), 1/(n(n-1)), b(n, gamma)}.
double eps_n_gamma(double c_n, int n, double b);

struct MoserSchedule {
  int n = 0;
  double p0 = 0.0;
  double q0 = 0.0;
  double mu = 0.0;
  double T_prime = 0.0;
  std::vector<double> q;    ///< q_0 .. q_K
  std::vector<double> tau;  ///< tau_0 .. tau_K
  /// Truncations through index K of sum 1/q_{k+1}, sum 1/q_k, sum k/q_k.
  std::vector<double> sum_inv_q_next;
  std::vector<double> sum_inv_q;
  std::vector<double> sum_k_over_q;
  /// Exact geometric tails of the three series after each truncation.
  std::vector<double> tail_inv_q_next;
  std::vector<double> tail_inv_q;
  std::vector<double> tail_k_over_q;
  double limit_inv_q_next = 0.0;  ///< (n-2)/n
  double limit_inv_q = 0.0;       ///< 1 - 4/n^2
  double limit_k_over_q = 0.0;

  struct LimitExponents {
    double inv_q_next = 0.0;  ///< (n-2)/n
    double inv_q = 0.0;       ///< 1 - 4/n^2
    double cs2_over_t = 0.0;  ///< 1 - 4/n^2
    double cs_inverse = 0.0;  ///< 4(n-2)/n^2
    double window = 0.0;      ///< 2/p0
  } limit_exponents;
};

MoserSchedule moser_schedule(int n, double T_prime, int K);

/// Series limits recomputed in exact rational arithmetic.
struct ExactMoserSums {
  int n = 0;
  std::string q0;                 ///< n^2 / (2(n-2))
  std::string sum_inv_q_next;     ///< closed form of sum_{k>=0} 1/q_{k+1}
  std::string sum_inv_q;          ///< closed form of sum_{k>=0} 1/q_k
  bool next_matches = false;      ///< equals (n-2)/n exactly
  bool all_matches = false;       ///< equals 1 - 4/n^2 exactly
  bool partials_consistent = false;  ///< partial + tail == limit for K = 0..checked_terms
  int checked_terms = 0;
};

ExactMoserSums exact_moser_sums(int n, int terms = 32);

/// c_fit * C_S^{-4(n-2)/n^2} (C_S^2/t)^{1-4/n^2} window^{2/p0}.
double moser_final_bound(int n, double cs, double t, double window_integral, double c_fit);

}  // namespace rflab
