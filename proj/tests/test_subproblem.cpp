#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace ddopt;
using namespace testing_support;

namespace {

const BoxQuadraticAgent& num_agent(int i) {
  static const auto p = num::build_num();
  return p.agent(i);
}

Vector scalar(double v) { return Vector::Constant(1, v); }

TEST(SolveExact, InteriorSolutionOfNumAgentOne) {
  const auto r = solve_exact(num_agent(0), scalar(3.0));
  EXPECT_NEAR(r.x[0], 5.9 - 3.0 / 3.6, 1e-14);
  EXPECT_NEAR(r.x[0], 5.0667, 1e-4);
  EXPECT_NEAR(r.lagrangian_value, -46.208, 1e-3);
  EXPECT_TRUE(r.is_exact);

  const double grid = grid_argmin([&](double x) { return partial_lagrangian(num_agent(0), scalar(3.0), scalar(x)); },
                                  0.0, 5.9, 1e-4);
  EXPECT_NEAR(r.x[0], grid, 1e-4);
}

TEST(SolveExact, ZeroPriceReturnsCenters) {
  const auto p = num::build_num();
  const Vector x = exact_primal(p, Vector::Zero(7));
  const double expected[] = {5.9, 6.6, 7.5, 4.8, 5.4, 8.1};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(x[i], expected[i]);
}

TEST(SolveExact, ClampsToLowerBound) {
  const auto r = solve_exact(num_agent(5), scalar(20.0));
  EXPECT_EQ(r.x[0], 0.0);
}

TEST(SolveExact, PriceLengthMismatchThrows) {
  EXPECT_THROW(solve_exact(num_agent(0), Vector::Zero(2)), ConfigError);
}

TEST(SolveWorstCase, TwoInteriorRootsAreEquallyLikely) {
  const auto& agent = num_agent(0);
  const double m = 5.9 - 3.0 / 3.6;
  const double lo = m - std::sqrt(0.5 / 1.8);
  const double hi = m + std::sqrt(0.5 / 1.8);
  EXPECT_NEAR(lo, 4.5397, 1e-4);
  EXPECT_NEAR(hi, 5.5937, 1e-4);

  const double D = solve_exact(agent, scalar(3.0)).lagrangian_value;
  Rng rng(5);
  int low_count = 0;
  const int draws = 4000;
  for (int t = 0; t < draws; ++t) {
    const auto r = solve_worst_case_inexact(agent, scalar(3.0), 0.5, rng);
    ASSERT_TRUE(std::abs(r.x[0] - lo) < 1e-12 || std::abs(r.x[0] - hi) < 1e-12) << r.x[0];
    EXPECT_NEAR(r.lagrangian_value - D, 0.5, 1e-10);
    EXPECT_FALSE(r.is_exact);
    if (std::abs(r.x[0] - lo) < 1e-12) ++low_count;
  }
  // Binomial(4000, 1/2): five standard deviations is about 158.
  EXPECT_NEAR(low_count, draws / 2, 160);
}

TEST(SolveWorstCase, ZeroBudgetIsExact) {
  std::mt19937_64 gen(23);
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto agent = random_agent(gen, 3);
    const Vector price = Vector::Random(3) * 4.0;
    const auto a = solve_worst_case_inexact(agent, price, 0.0, rng);
    const auto b = solve_exact(agent, price);
    EXPECT_EQ(a.x, b.x);
    EXPECT_TRUE(a.is_exact);
  }
}

TEST(SolveWorstCase, UnattainableBudgetReturnsFarCorner) {
  const auto agent = BoxQuadraticAgent::scalar(1.0, 0.0, 0.0, 0.0, 1.0);
  Rng rng(3);
  const auto r = solve_worst_case_inexact(agent, scalar(0.0), 100.0, rng);
  EXPECT_EQ(r.x[0], 1.0);
  EXPECT_DOUBLE_EQ(r.lagrangian_value - solve_exact(agent, scalar(0.0)).lagrangian_value, 1.0);

  // Grid oracle: the largest gap over the box.
  const double worst = -grid_argmin([&](double x) { return -agent.cost(scalar(x)); }, 0.0, 1.0, 1e-4);
  EXPECT_NEAR(-worst, 1.0, 1e-12);
}

TEST(SolveWorstCase, IsTheLargestGapWithinBudgetOnAGrid) {
  std::mt19937_64 gen(29);
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto agent = random_agent(gen, 1);
    const Vector price = scalar(uniform(gen, -4.0, 4.0));
    const double eps = uniform(gen, 0.0, 3.0);
    const double D = solve_exact(agent, price).lagrangian_value;
    const auto r = solve_worst_case_inexact(agent, price, eps, rng);
    const double gap = r.lagrangian_value - D;
    double best = 0.0;
    const double lo = agent.lower[0];
    const double hi = agent.upper[0];
    for (double x = lo; x <= hi; x += 1e-4) {
      const double g = partial_lagrangian(agent, price, scalar(x)) - D;
      if (g <= eps) best = std::max(best, g);
    }
    EXPECT_GE(gap, best - 1e-6) << "trial " << t;
    EXPECT_LE(gap, eps + 1e-9);
  }
}

TEST(SolveInexact, NegativeBudgetThrows) {
  Rng rng(1);
  EXPECT_THROW(solve_worst_case_inexact(num_agent(0), scalar(0.0), -1.0, rng), ConfigError);
  EXPECT_THROW(solve_level_set_inexact(num_agent(0), scalar(0.0), -1.0, rng), ConfigError);
}

TEST(SolveInexact, OracleNamesRoundTrip) {
  for (auto o : {InexactOracle::worst_case, InexactOracle::level_set}) EXPECT_EQ(parse_oracle(to_string(o)), o);
  EXPECT_THROW(parse_oracle("best-case"), ConfigError);
}

TEST(SolveInexact, SameSeedSameAnswers) {
  std::mt19937_64 gen(31);
  const auto agent = random_agent(gen, 4);
  const Vector price = Vector::Random(4);
  for (auto oracle : {InexactOracle::worst_case, InexactOracle::level_set}) {
    Rng r1(77);
    Rng r2(77);
    for (int t = 0; t < 50; ++t)
      EXPECT_EQ(solve_inexact(oracle, agent, price, 1.5, r1).x, solve_inexact(oracle, agent, price, 1.5, r2).x);
  }
}

// Properties over random agents, prices and budgets.

class OracleProperty : public ::testing::TestWithParam<InexactOracle> {};

TEST_P(OracleProperty, GapWithinBudgetAndDistanceBound) {
  std::mt19937_64 gen(37);
  Rng rng(41);
  for (int t = 0; t < 1000; ++t) {
    const int dim = 1 + static_cast<int>(gen() % 4);
    const auto agent = random_agent(gen, dim);
    Vector price(dim);
    for (int j = 0; j < dim; ++j) price[j] = uniform(gen, -6.0, 6.0);
    const double eps = uniform(gen, 0.0, 1.0) < 0.1 ? 0.0 : uniform(gen, 0.0, 10.0);
    const auto exact = solve_exact(agent, price);
    const auto r = solve_inexact(GetParam(), agent, price, eps, rng);
    ASSERT_TRUE(agent.contains(r.x));
    const double gap = r.lagrangian_value - exact.lagrangian_value;
    EXPECT_GE(gap, -1e-9);
    EXPECT_LE(gap, eps + 1e-9);
    EXPECT_LE((r.x - exact.x).squaredNorm(), 2.0 * eps / agent.modulus() + 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Oracles, OracleProperty,
                         ::testing::Values(InexactOracle::worst_case, InexactOracle::level_set),
                         [](const auto& info) {
                           return info.param == InexactOracle::worst_case ? std::string("WorstCase")
                                                                          : std::string("LevelSet");
                         });

TEST(SolveExactProperty, MatchesGridSearch) {
  std::mt19937_64 gen(43);
  for (int t = 0; t < 200; ++t) {
    const auto agent = random_agent(gen, 2);
    const Vector price = Vector::Random(2) * 5.0;
    const auto r = solve_exact(agent, price);
    for (int j = 0; j < 2; ++j) {
      auto f = [&](double x) { return agent.quad_coeff[j] * (x - agent.center[j]) * (x - agent.center[j]) + price[j] * x; };
      EXPECT_NEAR(r.x[j], grid_argmin(f, agent.lower[j], agent.upper[j], 1e-4), 1e-4);
    }
  }
}

TEST(SolveExactProperty, KktVariationalInequality) {
  std::mt19937_64 gen(47);
  for (int t = 0; t < 300; ++t) {
    const int dim = 1 + static_cast<int>(gen() % 3);
    const auto agent = random_agent(gen, dim);
    Vector price(dim);
    for (int j = 0; j < dim; ++j) price[j] = uniform(gen, -6.0, 6.0);
    const Vector x = solve_exact(agent, price).x;
    const Vector g = agent.gradient(x) + price;
    for (int s = 0; s < 20; ++s) {
      Vector y(dim);
      for (int j = 0; j < dim; ++j) y[j] = uniform(gen, agent.lower[j], agent.upper[j]);
      EXPECT_GE(g.dot(y - x), -1e-10);
    }
  }
}

TEST(DualFunction, GradientMatchesFiniteDifferences) {
  const auto p = num::build_num();
  std::mt19937_64 gen(53);
  for (int t = 0; t < 20; ++t) {
    const Vector lam = random_nonneg(gen, 7, 4.0) + Vector::Constant(7, 0.01);
    const Vector g = dual_gradient(p, lam);
    for (int j = 0; j < 7; ++j) {
      Vector e = Vector::Zero(7);
      e[j] = 1e-6;
      const double fd = (dual_value(p, lam + e) - dual_value(p, lam - e)) / 2e-6;
      EXPECT_NEAR(fd, g[j], 1e-4);
    }
  }
}

}  // namespace
