#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ddopt/engine.hpp"
#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/reference.hpp"
#include "ddopt/subproblem.hpp"

namespace ddopt {

/// Constants of the closed-form convergence envelopes for one (problem, config) pair.
struct BoundConstants {
  double alpha = 0.0;
  double gamma_alpha = 0.0;  // 1/alpha - (2 k0 + 1/2) L_D
  double eps_D = 0.0;
  int k0 = 0;
  double L_D = 0.0;
  double c_F = 0.0;
  double D_star = 0.0;
  double D_zero = 0.0;  // D(lambda^0), exact
  double lambda_star_norm = 0.0;
  double lambda_zero_norm = 0.0;
  double lambda_diff_norm = 0.0;  // ||lambda^0 - lambda*||
  double M_half = 0.0;
  double M_one = 0.0;
  double N_zero = 0.0;
  double N_half = 0.0;
  double N_one = 0.0;
  double N_one_prime = 0.0;
};

inline BoundConstants compute_constants(const CoupledProblem& problem, const LipschitzData& lips, const RunConfig& config,
                                        const ReferenceSolution& ref) {
  const double bound = max_step_size(lips, config.k0);
  if (!(config.alpha > 0.0) || !(config.alpha < bound))
    throw StepSizeError("envelopes need 0 < alpha < " + std::to_string(bound) + ", got " + std::to_string(config.alpha));

  BoundConstants c;
  c.alpha = config.alpha;
  c.k0 = config.k0;
  c.eps_D = config.eps_D();
  c.L_D = lips.L_D;
  c.c_F = lips.c_F;
  c.gamma_alpha = 1.0 / c.alpha - (2.0 * c.k0 + 0.5) * c.L_D;

  const Vector lambda0 = config.initial_multiplier(problem.num_constraints());
  c.D_star = ref.D_star;
  c.D_zero = dual_value(problem, lambda0);
  c.lambda_star_norm = ref.lambda_star.norm();
  c.lambda_zero_norm = lambda0.norm();
  c.lambda_diff_norm = (lambda0 - ref.lambda_star).norm();

  // D* >= D^0 in exact arithmetic; clip reference round-off.
  const double dual_drop = std::max(0.0, c.D_star - c.D_zero);
  const double a = c.alpha;
  const double g = c.gamma_alpha;
  const double k0 = c.k0;
  const double LD = c.L_D;
  const double eD = c.eps_D;

  c.M_half = 2.0 * std::sqrt(a * eD) + 2.0 * std::sqrt(k0 * LD * eD) / g;
  c.M_one = (k0 + 1.0) / a * (2.0 * c.lambda_star_norm + c.lambda_zero_norm + 2.0 * std::sqrt(2.0 * k0 * dual_drop / g));
  c.N_zero = 2.0 * eD + 2.0 * k0 * (k0 + 1.0) * LD * eD / (a * g * g);
  c.N_half = 4.0 * k0 * (k0 + 1.0) * std::sqrt(2.0 * LD * eD * dual_drop) / (a * std::pow(g, 1.5));
  c.N_one = (k0 + 1.0) / (2.0 * a) * (c.lambda_zero_norm * c.lambda_zero_norm + 8.0 * k0 * dual_drop / g);
  c.N_one_prime = (k0 + 1.0) / (2.0 * a) * (c.lambda_diff_norm * c.lambda_diff_norm + 8.0 * k0 * dual_drop / g);
  return c;
}

/// Upper bound on sqrt(S^k).
inline double envelope_S(const BoundConstants& c, int k) {
  const double dual_drop = std::max(0.0, c.D_star - c.D_zero);
  return std::sqrt(2.0 * c.L_D * c.eps_D) / c.gamma_alpha * std::sqrt(k + 1.0) + 2.0 * std::sqrt(dual_drop / c.gamma_alpha);
}

/// Upper bound on ||lambda^{k+1}|| given S^k (measured, or envelope_S(k)^2).
inline double envelope_lambda_norm(const BoundConstants& c, double S_k, int k) {
  return 2.0 * c.lambda_star_norm + c.lambda_zero_norm + 2.0 * std::sqrt(c.alpha * c.eps_D) * std::sqrt(k + 1.0) +
         std::sqrt(2.0 * c.k0) * std::sqrt(S_k);
}

/// Upper bound on ||[A x_bar^k - b]+||.
inline double envelope_violation(const BoundConstants& c, int k) {
  return c.M_half / std::sqrt(k + 1.0) + c.M_one / (k + 1.0);
}

/// (lower, upper) bounds on F(x_bar^k) - F*.
inline std::pair<double, double> envelope_primal(const BoundConstants& c, int k) {
  const double s = std::sqrt(k + 1.0);
  const double lower = -c.M_half * c.lambda_star_norm / s - c.M_one * c.lambda_star_norm / (k + 1.0);
  const double upper = c.N_zero + c.N_half / s + c.N_one / (k + 1.0);
  return {lower, upper};
}

/// Upper bound on D* - D(lambda_bar^{k+1}).
inline double envelope_dual(const BoundConstants& c, int k) {
  return c.N_zero + c.N_half / std::sqrt(k + 1.0) + c.N_one_prime / (k + 1.0);
}

/// Upper bound on ||x_bar^k - x*||^2.
inline double envelope_xdev(const BoundConstants& c, int k) {
  const double s = std::sqrt(k + 1.0);
  return 2.0 * c.N_zero / c.c_F + 2.0 * (c.N_half + c.lambda_star_norm * c.M_half) / (c.c_F * s) +
         2.0 * (c.N_one + c.lambda_star_norm * c.M_one) / (c.c_F * (k + 1.0));
}

}  // namespace ddopt
