#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ddopt/error.hpp"

namespace ddopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One agent's cost  sum_j a_j (x_j - center_j)^2 + offset  over the box [lower, upper].
struct BoxQuadraticAgent {
  Vector quad_coeff;
  Vector center;
  double offset = 0.0;
  Vector lower;
  Vector upper;

  static BoxQuadraticAgent scalar(double a, double center, double offset, double lower, double upper) {
    BoxQuadraticAgent agent;
    agent.quad_coeff = Vector::Constant(1, a);
    agent.center = Vector::Constant(1, center);
    agent.offset = offset;
    agent.lower = Vector::Constant(1, lower);
    agent.upper = Vector::Constant(1, upper);
    return agent;
  }

  int dim() const { return static_cast<int>(quad_coeff.size()); }

  /// Strong convexity modulus c_i = 2 min_j a_j.
  double modulus() const { return 2.0 * quad_coeff.minCoeff(); }

  double cost(const Eigen::Ref<const Vector>& x) const {
    return (quad_coeff.array() * (x - center).array().square()).sum() + offset;
  }

  Vector gradient(const Eigen::Ref<const Vector>& x) const {
    return (2.0 * quad_coeff.array() * (x - center).array()).matrix();
  }

  bool contains(const Eigen::Ref<const Vector>& x, double tol = 0.0) const {
    return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
  }

  Vector project(const Eigen::Ref<const Vector>& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

  void validate() const {
    const auto n = quad_coeff.size();
    if (n == 0) throw ConfigError("agent dimension must be positive");
    if (center.size() != n || lower.size() != n || upper.size() != n)
      throw ConfigError("agent vectors must all have length " + std::to_string(n));
    if (!quad_coeff.allFinite() || !center.allFinite() || !lower.allFinite() || !upper.allFinite() ||
        !std::isfinite(offset))
      throw ConfigError("agent data must be finite");
    if ((quad_coeff.array() <= 0.0).any()) throw ConfigError("quadratic coefficients must be strictly positive");
    if ((lower.array() > upper.array()).any()) throw ConfigError("agent box is empty (lower > upper)");
  }
};

/// Contiguous range of columns of A owned by one agent.
struct ColumnBlock {
  int offset = 0;
  int size = 0;
};

/// min F(x) = sum_i f_i(x_i)  s.t.  x_i in X_i,  A x <= b.
class CoupledProblem {
 public:
  CoupledProblem() = default;

  CoupledProblem(std::vector<BoxQuadraticAgent> agents, Matrix A, Vector b)
      : agents_(std::move(agents)), A_(std::move(A)), b_(std::move(b)) {
    if (agents_.empty()) throw ConfigError("problem needs at least one agent");
    int offset = 0;
    blocks_.reserve(agents_.size());
    for (const auto& agent : agents_) {
      agent.validate();
      blocks_.push_back({offset, agent.dim()});
      offset += agent.dim();
    }
    if (A_.cols() != offset)
      throw ConfigError("A has " + std::to_string(A_.cols()) + " columns but agents have " +
                        std::to_string(offset) + " variables");
    if (A_.rows() != b_.size())
      throw ConfigError("A has " + std::to_string(A_.rows()) + " rows but b has length " +
                        std::to_string(b_.size()));
    if (!A_.allFinite() || !b_.allFinite()) throw ConfigError("A and b must be finite");
  }

  const std::vector<BoxQuadraticAgent>& agents() const { return agents_; }
  const BoxQuadraticAgent& agent(int i) const { return agents_[static_cast<std::size_t>(i)]; }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

  int num_agents() const { return static_cast<int>(agents_.size()); }
  int num_vars() const { return static_cast<int>(A_.cols()); }
  int num_constraints() const { return static_cast<int>(A_.rows()); }

  ColumnBlock block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }

  auto block_matrix(int i) const { return A_.middleCols(block(i).offset, block(i).size); }

  template <typename Derived>
  auto slice(const Eigen::MatrixBase<Derived>& x, int i) const {
    return x.segment(block(i).offset, block(i).size);
  }

  template <typename Derived>
  auto slice(Eigen::MatrixBase<Derived>& x, int i) const {
    return x.segment(block(i).offset, block(i).size);
  }

  /// Strong convexity modulus of F, c_F = min_i c_i.
  double modulus() const {
    double c = std::numeric_limits<double>::infinity();
    for (const auto& agent : agents_) c = std::min(c, agent.modulus());
    return c;
  }

  Vector lower() const { return stacked(&BoxQuadraticAgent::lower); }
  Vector upper() const { return stacked(&BoxQuadraticAgent::upper); }
  Vector centers() const { return stacked(&BoxQuadraticAgent::center); }

  bool contains(const Eigen::Ref<const Vector>& x, double tol = 0.0) const {
    for (int i = 0; i < num_agents(); ++i)
      if (!agent(i).contains(slice(x, i), tol)) return false;
    return true;
  }

 private:
  Vector stacked(Vector BoxQuadraticAgent::*member) const {
    Vector out(num_vars());
    for (int i = 0; i < num_agents(); ++i) slice(out, i) = agents_[static_cast<std::size_t>(i)].*member;
    return out;
  }

  std::vector<BoxQuadraticAgent> agents_;
  Matrix A_;
  Vector b_;
  std::vector<ColumnBlock> blocks_;
};

struct LipschitzData {
  std::vector<double> per_agent_L;
  double L_D = 0.0;
  double frob_A = 0.0;
  std::vector<double> frob_Ai;
  double c_F = 0.0;
};

namespace detail {
inline void require_length(const Eigen::Ref<const Vector>& x, int n, const char* what) {
  if (x.size() != n)
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                      std::to_string(x.size()));
}
}  // namespace detail

/// F(x) = sum_i f_i(x_i). Feasibility is not checked.
inline double eval_objective(const CoupledProblem& problem, const Eigen::Ref<const Vector>& x) {
  detail::require_length(x, problem.num_vars(), "eval_objective");
  double total = 0.0;
  for (int i = 0; i < problem.num_agents(); ++i) total += problem.agent(i).cost(problem.slice(x, i));
  return total;
}

/// Residual A x - b of the coupling constraints.
inline Vector constraint_residual(const CoupledProblem& problem, const Eigen::Ref<const Vector>& x) {
  detail::require_length(x, problem.num_vars(), "constraint_residual");
  return problem.A() * x - problem.b();
}

/// Componentwise max(A x - b, 0).
inline Vector eval_violation(const CoupledProblem& problem, const Eigen::Ref<const Vector>& x) {
  return constraint_residual(problem, x).cwiseMax(0.0);
}

/// L_i = ||A_i||_F^2 / c_i and L_D = ||A||_F^2 / c_F.
inline LipschitzData lipschitz_data(const CoupledProblem& problem) {
  LipschitzData lips;
  lips.c_F = problem.modulus();
  lips.frob_A = problem.A().norm();
  lips.L_D = problem.A().squaredNorm() / lips.c_F;
  for (int i = 0; i < problem.num_agents(); ++i) {
    const double frob = problem.block_matrix(i).norm();
    lips.frob_Ai.push_back(frob);
    lips.per_agent_L.push_back(problem.block_matrix(i).squaredNorm() / problem.agent(i).modulus());
  }
  return lips;
}

/// Supremum of admissible constant step sizes, min{1/((2k0 + 1/2) L_D), 1/(2 L_D)}.
/// The admissible set is open: callers must pick alpha strictly below this value.
/// Returns +infinity when L_D == 0 (no coupling).
inline double max_step_size(const LipschitzData& lips, int k0) {
  if (k0 < 0) throw ConfigError("asynchrony parameter k0 must be nonnegative");
  if (lips.L_D <= 0.0) return std::numeric_limits<double>::infinity();
  return std::min(1.0 / ((2.0 * k0 + 0.5) * lips.L_D), 1.0 / (2.0 * lips.L_D));
}

}  // namespace ddopt
