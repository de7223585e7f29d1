#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "support.hpp"

using namespace ddopt;
using namespace testing_support;

namespace {

const ReferenceSolution& num_reference() {
  static const auto p = num::build_num();
  static const auto ref = solve_reference(p, lipschitz_data(p));
  return ref;
}

TEST(Reference, UncoupledInstance) {
  std::vector<BoxQuadraticAgent> agents{BoxQuadraticAgent::scalar(1.0, 3.0, 1.0, 0.0, 2.0),
                                        BoxQuadraticAgent::scalar(2.0, 0.5, -1.0, 0.0, 2.0)};
  const CoupledProblem p(std::move(agents), Matrix::Zero(2, 2), Vector::Zero(2));
  for (const auto& ref : {solve_reference(p, lipschitz_data(p)), solve_reference_coordinate(p)}) {
    EXPECT_EQ(ref.lambda_star, Vector::Zero(2));
    EXPECT_EQ(ref.x_star[0], 2.0);
    EXPECT_EQ(ref.x_star[1], 0.5);
    EXPECT_DOUBLE_EQ(ref.F_star, (1.0 + 1.0) + (0.0 - 1.0));
  }
}

TEST(Reference, SingleLinkByHand) {
  const auto p = one_link_problem();
  const auto ref = solve_reference(p, lipschitz_data(p));
  EXPECT_NEAR(ref.x_star[0], 1.0, 1e-10);
  EXPECT_NEAR(ref.lambda_star[0], 2.0, 1e-10);
  EXPECT_NEAR(ref.F_star, 1.0, 1e-10);

  // Fine grid over lambda.
  double best = -1e300, best_l = 0.0;
  for (double l = 0.0; l <= 5.0; l += 1e-4) {
    const double d = dual_value(p, Vector::Constant(1, l));
    if (d > best) {
      best = d;
      best_l = l;
    }
  }
  EXPECT_NEAR(best_l, 2.0, 1e-4);
  EXPECT_NEAR(best, ref.D_star, 1e-8);
}

TEST(Reference, NumOptimalityConditions) {
  const auto p = num::build_num();
  const auto& ref = num_reference();
  EXPECT_LE(std::abs(ref.F_star - ref.D_star), 1e-8);
  EXPECT_TRUE(p.contains(ref.x_star));
  const Vector residual = constraint_residual(p, ref.x_star);
  EXPECT_LE(residual.cwiseMax(0.0).norm(), 1e-6);
  EXPECT_LE(std::abs(ref.lambda_star.dot(residual)), 1e-6);
  EXPECT_GE(ref.lambda_star.minCoeff(), 0.0);
}

TEST(Reference, TwoSolversAgreeOnNum) {
  const auto p = num::build_num();
  const auto& a = num_reference();
  const auto b = solve_reference_coordinate(p);
  EXPECT_LE((a.lambda_star - b.lambda_star).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE((a.x_star - b.x_star).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_NEAR(a.D_star, b.D_star, 1e-9);
}

TEST(Reference, TwoSolversAgreeOnRandomProblems) {
  std::mt19937_64 gen(71);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_problem(gen, 4, 2, 3);
    const auto a = solve_reference(p, lipschitz_data(p));
    const auto b = solve_reference_coordinate(p);
    EXPECT_LE(std::abs(a.D_star - b.D_star), 1e-8 * (1.0 + std::abs(a.D_star))) << t;
    EXPECT_LE(std::abs(a.F_star - a.D_star), 1e-6 * (1.0 + std::abs(a.D_star))) << t;
  }
}

TEST(Reference, NonConvergenceIsReported) {
  const auto p = num::build_num();
  ReferenceOptions opts;
  opts.max_iterations = 5;
  EXPECT_THROW(solve_reference(p, lipschitz_data(p), opts), ConvergenceError);
}

TEST(Metrics, AtTheOptimum) {
  const auto p = num::build_num();
  const auto& ref = num_reference();
  const auto m = metrics(ref, p, ref.x_star, ref.lambda_star);
  EXPECT_LE(m.violation_norm, 1e-6);
  EXPECT_NEAR(m.primal_dev, 0.0, 1e-12);
  EXPECT_NEAR(m.dual_dev, 0.0, 1e-12);
  EXPECT_EQ(m.xdev_sq, 0.0);
}

TEST(Metrics, ZeroMultiplierAndCenters) {
  const auto p = num::build_num();
  const auto& ref = num_reference();
  const auto m = metrics(ref, p, p.centers(), Vector::Zero(7));
  EXPECT_NEAR(m.dual_dev, ref.D_star + 458.802, 1e-10);
  EXPECT_NEAR(dual_value(p, Vector::Zero(7)), -458.802, 1e-10);
  const double direct = std::sqrt(3.8 * 3.8 + 7.2 * 7.2 + 5.1 * 5.1 + 7.0 * 7.0);
  EXPECT_NEAR(m.violation_norm, direct, 1e-12);
  EXPECT_NEAR(m.violation_norm, 11.8865, 1e-4);
  EXPECT_THROW(metrics(ref, p, Vector::Zero(5), Vector::Zero(7)), ConfigError);
}

TEST(DualProperty, ConcaveAlongSegments) {
  const auto p = num::build_num();
  std::mt19937_64 gen(73);
  for (int t = 0; t < 1000; ++t) {
    const Vector lam = random_nonneg(gen, 7, 8.0);
    const Vector mu = random_nonneg(gen, 7, 8.0);
    const double s = uniform(gen, 0.0, 1.0);
    EXPECT_GE(dual_value(p, s * lam + (1 - s) * mu), s * dual_value(p, lam) + (1 - s) * dual_value(p, mu) - 1e-9);
  }
}

TEST(DualProperty, WeakDualityAndNonnegativeGap) {
  const auto p = num::build_num();
  const auto& ref = num_reference();
  std::mt19937_64 gen(79);
  const Vector lo = p.lower(), hi = p.upper();
  int feasible = 0;
  for (int t = 0; t < 2000; ++t) {
    const Vector lam = random_nonneg(gen, 7, 8.0);
    EXPECT_GE(ref.D_star - dual_value(p, lam), -1e-9);
    Vector x(6);
    for (int j = 0; j < 6; ++j) x[j] = uniform(gen, lo[j], hi[j]) * 0.7;
    if (eval_violation(p, x).norm() > 0.0) continue;
    ++feasible;
    EXPECT_LE(dual_value(p, lam), eval_objective(p, x) + 1e-9);
  }
  EXPECT_GT(feasible, 100);
}

TEST(ReferenceCache, WritesAndReusesEntries) {
  const auto dir = std::filesystem::temp_directory_path() / ("ddopt-cache-test-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto p = num::build_num();
  const auto lips = lipschitz_data(p);
  const auto first = cached_reference(p, lips, dir);
  const auto file = dir / ("reference-" + problem_hash(p) + ".json");
  ASSERT_TRUE(std::filesystem::exists(file));
  const auto second = cached_reference(p, lips, dir);
  EXPECT_EQ(first.lambda_star, second.lambda_star);
  EXPECT_EQ(first.x_star, second.x_star);
  EXPECT_EQ(first.D_star, second.D_star);
  EXPECT_EQ(first.F_star, second.F_star);

  // A corrupt entry is recomputed, not trusted.
  { std::ofstream(file) << "{ not json"; }
  const auto third = cached_reference(p, lips, dir);
  EXPECT_EQ(third.lambda_star, first.lambda_star);
  std::filesystem::remove_all(dir);
}

}  // namespace
