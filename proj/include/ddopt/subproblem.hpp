#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/random.hpp"

namespace ddopt {

/// Output of one agent's (possibly inexact) minimization of
/// L_i(x; lambda) = f_i(x) + <A_i^T lambda, x>.
struct SubproblemResult {
  Vector x;
  double lagrangian_value = 0.0;
  bool is_exact = true;
  double inexactness_budget = 0.0;
};

/// How an agent produces an epsilon-inexact answer.
enum class InexactOracle {
  /// Feasible point with the largest Lagrangian gap not exceeding the budget.
  worst_case,
  /// One of the two level-set roots of the unconstrained quadratic, picked
  /// uniformly at random, then projected onto the box.
  level_set,
};

inline std::string_view to_string(InexactOracle oracle) {
  return oracle == InexactOracle::worst_case ? "worst-case" : "level-set";
}

inline InexactOracle parse_oracle(std::string_view name) {
  if (name == "worst-case" || name == "worst_case") return InexactOracle::worst_case;
  if (name == "level-set" || name == "level_set") return InexactOracle::level_set;
  throw ConfigError("unknown inexact oracle '" + std::string(name) + "'");
}

inline double partial_lagrangian(const BoxQuadraticAgent& agent, const Eigen::Ref<const Vector>& price,
                                 const Eigen::Ref<const Vector>& x) {
  return agent.cost(x) + price.dot(x);
}

/// Unique minimizer of L_i over the box: clamp(center - q / (2a), lower, upper) per coordinate,
/// where q = A_i^T lambda.
inline SubproblemResult solve_exact(const BoxQuadraticAgent& agent, const Eigen::Ref<const Vector>& price) {
  detail::require_length(price, agent.dim(), "solve_exact");
  SubproblemResult result;
  const Vector unconstrained = agent.center.array() - price.array() / (2.0 * agent.quad_coeff.array());
  result.x = agent.project(unconstrained);
  result.lagrangian_value = partial_lagrangian(agent, price, result.x);
  return result;
}

namespace detail {

struct CoordinateProblem {
  double a;
  double vertex;     // unconstrained minimizer m
  double exact;      // clamp(m)
  double lower;
  double upper;

  // L(x) - L(exact) for the one-dimensional term a (x - m)^2 + const.
  double gap(double x) const { return a * ((x - vertex) * (x - vertex) - (exact - vertex) * (exact - vertex)); }

  std::array<double, 2> level_set_roots(double budget) const {
    const double radius = std::sqrt((exact - vertex) * (exact - vertex) + budget / a);
    return {std::clamp(vertex - radius, lower, upper), std::clamp(vertex + radius, lower, upper)};
  }
};

inline CoordinateProblem coordinate(const BoxQuadraticAgent& agent, const Eigen::Ref<const Vector>& price,
                                    int j) {
  CoordinateProblem c;
  c.a = agent.quad_coeff[j];
  c.vertex = agent.center[j] - price[j] / (2.0 * c.a);
  c.lower = agent.lower[j];
  c.upper = agent.upper[j];
  c.exact = std::clamp(c.vertex, c.lower, c.upper);
  return c;
}

inline void check_budget(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("inexactness budget must be finite and >= 0");
}

}  // namespace detail

/// Feasible x maximizing L_i(x) - D_i subject to that gap <= eps. The budget is split
/// equally across coordinates; each coordinate takes whichever of its two clamped
/// level-set roots has the larger gap. Equal gaps at distinct points consume one rng
/// draw and are resolved uniformly.
inline SubproblemResult solve_worst_case_inexact(const BoxQuadraticAgent& agent,
                                                 const Eigen::Ref<const Vector>& price, double eps,
                                                 Rng& rng) {
  detail::check_budget(eps);
  SubproblemResult exact = solve_exact(agent, price);
  if (eps == 0.0) return exact;

  const double share = eps / agent.dim();
  SubproblemResult result;
  result.x.resize(agent.dim());
  for (int j = 0; j < agent.dim(); ++j) {
    const auto c = detail::coordinate(agent, price, j);
    const auto roots = c.level_set_roots(share);
    const double g0 = c.gap(roots[0]);
    const double g1 = c.gap(roots[1]);
    const double tie_tol = 1e-12 * std::max(1.0, share);
    double pick;
    if (roots[0] != roots[1] && std::abs(g0 - g1) <= tie_tol) {
      pick = roots[uniform_index(rng, 2)];
    } else {
      pick = g0 >= g1 ? roots[0] : roots[1];
    }
    result.x[j] = pick;
  }
  result.lagrangian_value = partial_lagrangian(agent, price, result.x);
  result.is_exact = false;
  result.inexactness_budget = eps;
  return result;
}

/// Level-set oracle: for each coordinate draw one side uniformly (one rng draw per
/// coordinate), take the root of  a (x - m)^2 = a (x* - m)^2 + eps_j  on that side and
/// project it onto the box. The gap stays in [0, eps_j] because the projected root lies
/// between x* and the root on a convex parabola.
inline SubproblemResult solve_level_set_inexact(const BoxQuadraticAgent& agent,
                                                const Eigen::Ref<const Vector>& price, double eps, Rng& rng) {
  detail::check_budget(eps);
  SubproblemResult exact = solve_exact(agent, price);
  if (eps == 0.0) return exact;

  const double share = eps / agent.dim();
  SubproblemResult result;
  result.x.resize(agent.dim());
  for (int j = 0; j < agent.dim(); ++j) {
    const auto roots = detail::coordinate(agent, price, j).level_set_roots(share);
    result.x[j] = roots[uniform_index(rng, 2)];
  }
  result.lagrangian_value = partial_lagrangian(agent, price, result.x);
  result.is_exact = false;
  result.inexactness_budget = eps;
  return result;
}

inline SubproblemResult solve_inexact(InexactOracle oracle, const BoxQuadraticAgent& agent,
                                      const Eigen::Ref<const Vector>& price, double eps, Rng& rng) {
  return oracle == InexactOracle::worst_case ? solve_worst_case_inexact(agent, price, eps, rng)
                                             : solve_level_set_inexact(agent, price, eps, rng);
}

// Dual function assembled from exact per-agent solves.

/// x(lambda) = col{x_i(lambda)}.
inline Vector exact_primal(const CoupledProblem& problem, const Eigen::Ref<const Vector>& lambda) {
  detail::require_length(lambda, problem.num_constraints(), "exact_primal");
  Vector x(problem.num_vars());
  for (int i = 0; i < problem.num_agents(); ++i) {
    const Vector price = problem.block_matrix(i).transpose() * lambda;
    problem.slice(x, i) = solve_exact(problem.agent(i), price).x;
  }
  return x;
}

/// D(lambda) = sum_i D_i(lambda) - <lambda, b>.
inline double dual_value(const CoupledProblem& problem, const Eigen::Ref<const Vector>& lambda) {
  detail::require_length(lambda, problem.num_constraints(), "dual_value");
  double total = -lambda.dot(problem.b());
  for (int i = 0; i < problem.num_agents(); ++i) {
    const Vector price = problem.block_matrix(i).transpose() * lambda;
    total += solve_exact(problem.agent(i), price).lagrangian_value;
  }
  return total;
}

/// grad D(lambda) = A x(lambda) - b.
inline Vector dual_gradient(const CoupledProblem& problem, const Eigen::Ref<const Vector>& lambda) {
  return constraint_residual(problem, exact_primal(problem, lambda));
}

}  // namespace ddopt
