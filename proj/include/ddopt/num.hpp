#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ddopt/engine.hpp"
#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"

namespace ddopt::num {

struct SourceData {
  double x_lower;
  double x_upper;
  double C_a;
  double C_b;
  std::vector<int> path;  // 1-based link ids, in traversal order
};

/// Six sources over seven capacitated links.
inline const std::vector<SourceData>& sources() {
  static const std::vector<SourceData> data = {
      {0.0, 5.9, 1.8, 62.658, {1, 2, 7}},
      {0.0, 6.6, 2.2, 95.832, {6, 5, 4}},
      {0.0, 7.5, 2.7, 151.875, {7, 5, 6, 1}},
      {0.0, 4.8, 3.5, 80.640, {3, 2, 6, 5}},
      {0.0, 5.4, 1.2, 34.992, {4, 3, 2, 1}},
      {0.0, 8.1, 0.5, 32.805, {6, 2, 3, 4}},
  };
  return data;
}

inline const std::array<double, 7>& link_capacities() {
  static const std::array<double, 7> b = {15, 17, 20, 15, 20, 20, 15};
  return b;
}

/// Cost of source i is C_a (x - x_upper)^2 - C_b, i.e. the negated utility.
inline CoupledProblem build_num() {
  const auto& src = sources();
  const auto& caps = link_capacities();
  std::vector<BoxQuadraticAgent> agents;
  Matrix A = Matrix::Zero(static_cast<int>(caps.size()), static_cast<int>(src.size()));
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& s = src[i];
    agents.push_back(BoxQuadraticAgent::scalar(s.C_a, s.x_upper, -s.C_b, s.x_lower, s.x_upper));
    for (int link : s.path) A(link - 1, static_cast<int>(i)) = 1.0;
  }
  Vector b(static_cast<int>(caps.size()));
  for (std::size_t j = 0; j < caps.size(); ++j) b[static_cast<int>(j)] = caps[j];
  return CoupledProblem(std::move(agents), std::move(A), std::move(b));
}

inline constexpr double kStepSize = 0.004;
inline constexpr int kDefaultIterations = 100'000;
inline constexpr std::uint64_t kSeed = 20211103;
inline constexpr std::array<std::string_view, 4> kScenarioNames = {"sync_exact", "async_exact", "sync_inexact",
                                                                   "async_inexact"};

/// The four benchmark configurations: k0 in {0, 4} crossed with eps_D in {0, 30}
/// (split equally over the six sources), alpha = 0.004, lambda^0 = 0. Runs go the
/// full horizon; inexact agents use the level-set oracle.
inline RunConfig scenario(std::string_view name) {
  RunConfig config;
  config.alpha = kStepSize;
  config.tolerance = 1e-8;
  config.max_iters = kDefaultIterations;
  config.seed = kSeed;
  config.record_every = 1;
  config.stop_on_tolerance = false;
  config.oracle = InexactOracle::level_set;
  const std::size_t n = sources().size();
  if (name == "sync_exact") {
    config.k0 = 0;
    config.eps_per_agent.assign(n, 0.0);
  } else if (name == "async_exact") {
    config.k0 = 4;
    config.eps_per_agent.assign(n, 0.0);
  } else if (name == "sync_inexact") {
    config.k0 = 0;
    config.eps_per_agent.assign(n, 30.0 / static_cast<double>(n));
  } else if (name == "async_inexact") {
    config.k0 = 4;
    config.eps_per_agent.assign(n, 30.0 / static_cast<double>(n));
  } else {
    throw ConfigError("unknown scenario '" + std::string(name) +
                      "' (expected sync_exact, async_exact, sync_inexact or async_inexact)");
  }
  return config;
}

}  // namespace ddopt::num
