#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/subproblem.hpp"

namespace ddopt {

struct SolverReport {
  long iterations = 0;
  double final_step = 0.0;  // last ||lambda^{k+1} - lambda^k||
  double gradient_norm = 0.0;  // ||[grad D(lambda*)]_projected||
};

/// High-accuracy primal/dual optimum.
struct ReferenceSolution {
  Vector x_star;
  Vector lambda_star;
  double F_star = 0.0;
  double D_star = 0.0;
  double duality_gap = 0.0;
  SolverReport report;
};

struct ReferenceOptions {
  double relative_tolerance = 1e-12;
  long max_iterations = 10'000'000;
};

namespace detail {

// Norm of the projected-gradient residual: zero exactly at a maximizer of D over lambda >= 0.
inline double projected_gradient_norm(const Vector& lambda, const Vector& gradient) {
  return ((lambda + gradient).cwiseMax(0.0) - lambda).norm();
}

inline ReferenceSolution finish_reference(const CoupledProblem& problem, Vector lambda, SolverReport report) {
  ReferenceSolution ref;
  ref.lambda_star = std::move(lambda);
  ref.x_star = exact_primal(problem, ref.lambda_star);
  ref.F_star = eval_objective(problem, ref.x_star);
  ref.D_star = dual_value(problem, ref.lambda_star);
  ref.duality_gap = ref.F_star - ref.D_star;
  report.gradient_norm = projected_gradient_norm(ref.lambda_star, dual_gradient(problem, ref.lambda_star));
  ref.report = report;
  return ref;
}

inline ReferenceSolution uncoupled_reference(const CoupledProblem& problem) {
  if ((problem.b().array() < 0.0).any()) throw ConfigError("A = 0 with negative b: coupling constraints are infeasible");
  return finish_reference(problem, Vector::Zero(problem.num_constraints()), {});
}

}  // namespace detail

/// Maximizes D over lambda >= 0 by projected gradient ascent with step 1/(2 L_D),
/// stopping when ||lambda^{k+1} - lambda^k|| <= tol (1 + ||lambda^k||).
inline ReferenceSolution solve_reference(const CoupledProblem& problem, const LipschitzData& lips,
                                         const ReferenceOptions& options = {}) {
  if (lips.L_D <= 0.0) return detail::uncoupled_reference(problem);
  const double step = 1.0 / (2.0 * lips.L_D);
  Vector lambda = Vector::Zero(problem.num_constraints());
  SolverReport report;
  for (long it = 1; it <= options.max_iterations; ++it) {
    Vector next = (lambda + step * dual_gradient(problem, lambda)).cwiseMax(0.0);
    const double move = (next - lambda).norm();
    const double scale = 1.0 + lambda.norm();
    lambda = std::move(next);
    report.iterations = it;
    report.final_step = move;
    if (move <= options.relative_tolerance * scale) return detail::finish_reference(problem, std::move(lambda), report);
  }
  throw ConvergenceError("reference dual ascent did not converge in " + std::to_string(options.max_iterations) +
                         " iterations (last step " + std::to_string(report.final_step) + ")");
}

/// Independent second solver: cyclic coordinate ascent on D with exact one-dimensional
/// maximization. dD/dlambda_j = (A x(lambda) - b)_j is nonincreasing in lambda_j, so
/// each coordinate is set to the root of that derivative on [0, inf) by bisection.
inline ReferenceSolution solve_reference_coordinate(const CoupledProblem& problem, double tolerance = 1e-13,
                                                    long max_sweeps = 1'000'000) {
  const int m = problem.num_constraints();
  if (problem.A().squaredNorm() == 0.0) return detail::uncoupled_reference(problem);

  auto partial = [&](Vector& lambda, int j, double t) {
    lambda[j] = t;
    return problem.A().row(j).dot(exact_primal(problem, lambda)) - problem.b()[j];
  };

  Vector lambda = Vector::Zero(m);
  SolverReport report;
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    double largest = 0.0;
    for (int j = 0; j < m; ++j) {
      const double old = lambda[j];
      double value;
      if (partial(lambda, j, 0.0) <= 0.0) {
        value = 0.0;
      } else {
        double lo = 0.0;
        double hi = std::max(1.0, 2.0 * old);
        while (partial(lambda, j, hi) > 0.0) {
          lo = hi;
          hi *= 2.0;
          if (!std::isfinite(hi)) throw ConvergenceError("coordinate ascent: unbounded dual coordinate");
        }
        for (int b = 0; b < 200 && hi - lo > 0.0; ++b) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          if (partial(lambda, j, mid) > 0.0)
            lo = mid;
          else
            hi = mid;
        }
        value = 0.5 * (lo + hi);
      }
      lambda[j] = value;
      largest = std::max(largest, std::abs(value - old));
    }
    report.iterations = sweep;
    report.final_step = largest;
    if (largest <= tolerance * (1.0 + lambda.norm())) return detail::finish_reference(problem, std::move(lambda), report);
  }
  throw ConvergenceError("coordinate ascent did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

struct Metrics {
  double violation_norm = 0.0;  // ||[A x_bar - b]+||
  double primal_dev = 0.0;      // F(x_bar) - F*
  double dual_dev = 0.0;        // D* - D(lambda_bar)
  double xdev_sq = 0.0;         // ||x_bar - x*||^2
};

inline Metrics metrics(const ReferenceSolution& ref, const CoupledProblem& problem, const Eigen::Ref<const Vector>& x_bar,
                       const Eigen::Ref<const Vector>& lambda_bar) {
  detail::require_length(x_bar, problem.num_vars(), "metrics");
  detail::require_length(lambda_bar, problem.num_constraints(), "metrics");
  Metrics out;
  out.violation_norm = eval_violation(problem, x_bar).norm();
  out.primal_dev = eval_objective(problem, x_bar) - ref.F_star;
  out.dual_dev = ref.D_star - dual_value(problem, lambda_bar);
  out.xdev_sq = (x_bar - ref.x_star).squaredNorm();
  return out;
}

}  // namespace ddopt
