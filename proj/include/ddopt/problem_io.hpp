#pragma once

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/reference.hpp"

namespace ddopt {

// Problem file (JSON):
//   {
//     "agents": [ {"a": [..], "center": [..], "offset": c, "lower": [..], "upper": [..]}, ... ],
//     "A": [ [row 1], [row 2], ... ],
//     "b": [ .. ]
//   }
// Per-agent vector fields may be given as a bare number for one-dimensional agents.

namespace detail {

inline Vector json_vector(const nlohmann::json& j, const std::string& what) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError(what + ": expected a number or an array of numbers");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": element " + std::to_string(i) + " is not a number");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json vector_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace detail

inline CoupledProblem problem_from_json(const nlohmann::json& j) {
  const auto& agents_json = detail::field(j, "agents", "problem");
  if (!agents_json.is_array()) throw ConfigError("problem: 'agents' must be an array");
  std::vector<BoxQuadraticAgent> agents;
  for (std::size_t i = 0; i < agents_json.size(); ++i) {
    const std::string where = "agent " + std::to_string(i);
    const auto& aj = agents_json[i];
    BoxQuadraticAgent agent;
    agent.quad_coeff = detail::json_vector(detail::field(aj, "a", where), where + ".a");
    agent.center = detail::json_vector(detail::field(aj, "center", where), where + ".center");
    agent.lower = detail::json_vector(detail::field(aj, "lower", where), where + ".lower");
    agent.upper = detail::json_vector(detail::field(aj, "upper", where), where + ".upper");
    const auto& offset = aj.contains("offset") ? aj.at("offset") : nlohmann::json(0.0);
    if (!offset.is_number()) throw ConfigError(where + ".offset: expected a number");
    agent.offset = offset.get<double>();
    agents.push_back(std::move(agent));
  }

  const auto& rows = detail::field(j, "A", "problem");
  const Vector b = detail::json_vector(detail::field(j, "b", "problem"), "problem.b");
  if (!rows.is_array()) throw ConfigError("problem: 'A' must be an array of rows");
  int n = 0;
  for (const auto& agent : agents) n += agent.dim();
  Matrix A(static_cast<int>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Vector row = detail::json_vector(rows[r], "problem.A row " + std::to_string(r));
    if (row.size() != n)
      throw ConfigError("problem.A row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(n));
    A.row(static_cast<int>(r)) = row.transpose();
  }
  return CoupledProblem(std::move(agents), std::move(A), b);
}

inline nlohmann::json problem_to_json(const CoupledProblem& problem) {
  nlohmann::json j;
  j["agents"] = nlohmann::json::array();
  for (const auto& agent : problem.agents()) {
    j["agents"].push_back({{"a", detail::vector_json(agent.quad_coeff)},
                           {"center", detail::vector_json(agent.center)},
                           {"offset", agent.offset},
                           {"lower", detail::vector_json(agent.lower)},
                           {"upper", detail::vector_json(agent.upper)}});
  }
  j["A"] = nlohmann::json::array();
  for (int r = 0; r < problem.num_constraints(); ++r) j["A"].push_back(detail::vector_json(problem.A().row(r).transpose()));
  j["b"] = detail::vector_json(problem.b());
  return j;
}

inline CoupledProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read problem file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("problem file " + path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

inline void save_problem(const CoupledProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write problem file " + path.string());
  out << problem_to_json(problem).dump(2) << '\n';
}

/// FNV-1a over the dimensions and the exact bit patterns of every number in the problem.
inline std::string problem_hash(const CoupledProblem& problem) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (word >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_vector = [&](const Vector& v) {
    mix(static_cast<std::uint64_t>(v.size()));
    for (int i = 0; i < v.size(); ++i) mix(std::bit_cast<std::uint64_t>(v[i]));
  };
  mix(static_cast<std::uint64_t>(problem.num_agents()));
  for (const auto& agent : problem.agents()) {
    mix_vector(agent.quad_coeff);
    mix_vector(agent.center);
    mix(std::bit_cast<std::uint64_t>(agent.offset));
    mix_vector(agent.lower);
    mix_vector(agent.upper);
  }
  mix(static_cast<std::uint64_t>(problem.A().rows()));
  for (int r = 0; r < problem.A().rows(); ++r)
    for (int c = 0; c < problem.A().cols(); ++c) mix(std::bit_cast<std::uint64_t>(problem.A()(r, c)));
  mix_vector(problem.b());
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// Reference cache.

inline nlohmann::json reference_to_json(const ReferenceSolution& ref, const std::string& hash) {
  return {{"problem_hash", hash},
          {"x_star", detail::vector_json(ref.x_star)},
          {"lambda_star", detail::vector_json(ref.lambda_star)},
          {"F_star", ref.F_star},
          {"D_star", ref.D_star},
          {"duality_gap", ref.duality_gap},
          {"iterations", ref.report.iterations},
          {"final_step", ref.report.final_step},
          {"gradient_norm", ref.report.gradient_norm}};
}

inline ReferenceSolution reference_from_json(const nlohmann::json& j) {
  ReferenceSolution ref;
  ref.x_star = detail::json_vector(detail::field(j, "x_star", "reference"), "reference.x_star");
  ref.lambda_star = detail::json_vector(detail::field(j, "lambda_star", "reference"), "reference.lambda_star");
  ref.F_star = detail::field(j, "F_star", "reference").get<double>();
  ref.D_star = detail::field(j, "D_star", "reference").get<double>();
  ref.duality_gap = detail::field(j, "duality_gap", "reference").get<double>();
  ref.report.iterations = detail::field(j, "iterations", "reference").get<long>();
  ref.report.final_step = detail::field(j, "final_step", "reference").get<double>();
  ref.report.gradient_norm = detail::field(j, "gradient_norm", "reference").get<double>();
  return ref;
}

inline constexpr const char* kCacheEnv = "DDOPT_CACHE_DIR";

/// Cache directory from the DDOPT_CACHE_DIR environment variable, if set and non-empty.
inline std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* dir = std::getenv(kCacheEnv);
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::filesystem::path(dir);
}

/// Reads `<dir>/reference-<hash>.json` when present, otherwise solves and writes it.
inline ReferenceSolution cached_reference(const CoupledProblem& problem, const LipschitzData& lips,
                                          const std::optional<std::filesystem::path>& dir) {
  if (!dir) return solve_reference(problem, lips);
  const std::string hash = problem_hash(problem);
  const auto path = *dir / ("reference-" + hash + ".json");
  if (std::ifstream in(path); in) {
    try {
      nlohmann::json j;
      in >> j;
      if (j.value("problem_hash", std::string()) == hash) {
        auto ref = reference_from_json(j);
        if (ref.x_star.size() == problem.num_vars() && ref.lambda_star.size() == problem.num_constraints()) return ref;
      }
    } catch (const std::exception&) {
      // unreadable cache entry: recompute below
    }
  }
  auto ref = solve_reference(problem, lips);
  std::error_code ec;
  std::filesystem::create_directories(*dir, ec);
  if (std::ofstream out(path); out) out << reference_to_json(ref, hash).dump(2) << '\n';
  return ref;
}

}  // namespace ddopt
