#pragma once

#include <random>

#include "ddopt/ddopt.hpp"

namespace testing_support {

using ddopt::BoxQuadraticAgent;
using ddopt::CoupledProblem;
using ddopt::Matrix;
using ddopt::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random agent of dimension `dim` with a box that may or may not contain the center.
inline BoxQuadraticAgent random_agent(std::mt19937_64& rng, int dim) {
  BoxQuadraticAgent agent;
  agent.quad_coeff.resize(dim);
  agent.center.resize(dim);
  agent.lower.resize(dim);
  agent.upper.resize(dim);
  for (int j = 0; j < dim; ++j) {
    agent.quad_coeff[j] = uniform(rng, 0.2, 4.0);
    agent.lower[j] = uniform(rng, -3.0, 2.0);
    agent.upper[j] = agent.lower[j] + uniform(rng, 0.1, 5.0);
    agent.center[j] = uniform(rng, agent.lower[j] - 2.0, agent.upper[j] + 2.0);
  }
  agent.offset = uniform(rng, -10.0, 10.0);
  return agent;
}

/// Random coupled problem with nonnegative A and b chosen so the lower box corner is
/// strictly feasible.
inline CoupledProblem random_problem(std::mt19937_64& rng, int n_agents, int max_dim, int m) {
  std::vector<BoxQuadraticAgent> agents;
  int n = 0;
  for (int i = 0; i < n_agents; ++i) {
    const int dim = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_dim));
    agents.push_back(random_agent(rng, dim));
    n += dim;
  }
  Matrix A(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) A(r, c) = uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : uniform(rng, 0.1, 2.0);
  CoupledProblem unconstrained(agents, A, Vector::Zero(m));
  const Vector floor = A * unconstrained.lower();
  Vector b(m);
  for (int r = 0; r < m; ++r) b[r] = floor[r] + uniform(rng, 0.5, 6.0);
  return CoupledProblem(std::move(agents), std::move(A), std::move(b));
}

inline Vector random_nonneg(std::mt19937_64& rng, int m, double hi = 5.0) {
  Vector v(m);
  for (int j = 0; j < m; ++j) v[j] = uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : uniform(rng, 0.0, hi);
  return v;
}

/// Brute-force minimizer of a x^2-type 1-D objective on a grid with the given step.
template <typename F>
double grid_argmin(F f, double lo, double hi, double step) {
  double best_x = lo;
  double best = f(lo);
  const long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long t = 1; t <= n; ++t) {
    const double x = lo + static_cast<double>(t) * step;
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  if (const double v = f(hi); v < best) best_x = hi;
  return best_x;
}

inline CoupledProblem one_link_problem() {
  // a = 1, center = 2, box [0, 2], A = (1), b = (1)
  std::vector<BoxQuadraticAgent> agents{BoxQuadraticAgent::scalar(1.0, 2.0, 0.0, 0.0, 2.0)};
  return CoupledProblem(std::move(agents), Matrix::Ones(1, 1), Vector::Ones(1));
}

}  // namespace testing_support
