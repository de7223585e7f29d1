#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddopt/error.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/random.hpp"
#include "ddopt/schedule.hpp"
#include "ddopt/subproblem.hpp"

namespace ddopt {

struct RunConfig {
  double alpha = 0.0;
  double tolerance = 1e-8;
  int max_iters = 1000;  // last tick index; ticks run 0..max_iters
  int k0 = 0;
  std::vector<double> eps_per_agent;
  std::uint64_t seed = 0;
  int record_every = 1;
  Vector lambda0;  // empty means zero
  InexactOracle oracle = InexactOracle::worst_case;
  bool stop_on_tolerance = true;

  double eps_D() const { return std::accumulate(eps_per_agent.begin(), eps_per_agent.end(), 0.0); }

  Vector initial_multiplier(int m) const { return lambda0.size() == 0 ? Vector::Zero(m) : lambda0; }
};

/// Stream seed for oracle tie-breaks; the schedule is generated from `seed` itself.
inline std::uint64_t oracle_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

/// Rejects configurations outside the admissible step-size range or with malformed fields.
inline void validate_config(const CoupledProblem& problem, const LipschitzData& lips, const RunConfig& config) {
  if (!(config.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
  if (config.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (config.k0 < 0) throw ConfigError("k0 must be >= 0");
  if (config.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (static_cast<int>(config.eps_per_agent.size()) != problem.num_agents())
    throw ConfigError("need one inexactness budget per agent (" + std::to_string(problem.num_agents()) + ")");
  for (double e : config.eps_per_agent)
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("inexactness budgets must be finite and >= 0");
  if (config.lambda0.size() != 0) {
    if (config.lambda0.size() != problem.num_constraints()) throw ConfigError("lambda0 has wrong length");
    if ((config.lambda0.array() < 0.0).any() || !config.lambda0.allFinite())
      throw ConfigError("lambda0 must be finite and nonnegative");
  }
  const double bound = max_step_size(lips, config.k0);
  if (!(config.alpha > 0.0) || !(config.alpha < bound))
    throw StepSizeError("step size " + std::to_string(config.alpha) +
                        " violates 0 < alpha < min{1/((2k0+1/2)L_D), 1/(2L_D)} = " + std::to_string(bound) +
                        " (k0 = " + std::to_string(config.k0) + ", L_D = " + std::to_string(lips.L_D) + ")");
}

/// lambda^{k+1} = max(lambda^k + alpha nu^k, 0).
inline Vector dual_step(const Eigen::Ref<const Vector>& lambda, const Eigen::Ref<const Vector>& nu, double alpha) {
  if (lambda.size() != nu.size()) throw ConfigError("dual_step: dimension mismatch");
  if (!(alpha > 0.0)) throw ConfigError("dual_step: alpha must be > 0");
  return (lambda + alpha * nu).cwiseMax(0.0);
}

/// Ring buffers holding the last k0+1 multipliers and each agent's outputs from its
/// last k0+1 ticks. Reads older than k0 ticks are rejected.
class StaleBuffers {
 public:
  struct PrimalEntry {
    int slot = -1;
    int source_tick = -1;  // tick of the multiplier the agent solved against
    Vector x;
  };

  StaleBuffers(int n_agents, int m, int k0)
      : k0_(k0),
        dual_(static_cast<std::size_t>(k0 + 1)),
        dual_tick_(static_cast<std::size_t>(k0 + 1), -1),
        primal_(static_cast<std::size_t>(n_agents), std::vector<PrimalEntry>(static_cast<std::size_t>(k0 + 1))),
        last_dual_seen(static_cast<std::size_t>(n_agents), Vector::Zero(m)),
        last_dual_tick(static_cast<std::size_t>(n_agents), -1),
        last_primal_seen(static_cast<std::size_t>(n_agents)),
        last_primal_tick(static_cast<std::size_t>(n_agents), -1) {}

  void publish_dual(int tick, const Vector& lambda) {
    const auto pos = index(tick);
    dual_[pos] = lambda;
    dual_tick_[pos] = tick;
  }

  /// Agent i at `reader_tick` reads lambda^{tick}.
  const Vector& read_dual(int i, int tick, int reader_tick) {
    const auto pos = index(tick);
    if (reader_tick - tick > k0_ || tick > reader_tick || dual_tick_[pos] != tick)
      throw ConfigError("stale read of lambda^" + std::to_string(tick) + " at tick " + std::to_string(reader_tick));
    last_dual_seen[static_cast<std::size_t>(i)] = dual_[pos];
    last_dual_tick[static_cast<std::size_t>(i)] = tick;
    return dual_[pos];
  }

  void publish_primal(int i, int slot, int source_tick, Vector x) {
    auto& entry = primal_[static_cast<std::size_t>(i)][index(slot)];
    entry.slot = slot;
    entry.source_tick = source_tick;
    entry.x = std::move(x);
  }

  /// Coordinator at `reader_tick` reads agent i's output produced at `slot`.
  const PrimalEntry& read_primal(int i, int slot, int reader_tick) {
    const auto& entry = primal_[static_cast<std::size_t>(i)][index(slot)];
    if (reader_tick - slot > k0_ || slot > reader_tick || entry.slot != slot)
      throw ConfigError("agent " + std::to_string(i) + " has no output for tick " + std::to_string(slot) +
                        " readable at tick " + std::to_string(reader_tick));
    last_primal_seen[static_cast<std::size_t>(i)] = entry.x;
    last_primal_tick[static_cast<std::size_t>(i)] = slot;
    return entry;
  }

 private:
  std::size_t index(int tick) const { return static_cast<std::size_t>(tick % (k0_ + 1)); }

  int k0_;
  std::vector<Vector> dual_;
  std::vector<int> dual_tick_;
  std::vector<std::vector<PrimalEntry>> primal_;

 public:
  std::vector<Vector> last_dual_seen;
  std::vector<int> last_dual_tick;
  std::vector<Vector> last_primal_seen;
  std::vector<int> last_primal_tick;
};

struct IterationRecord {
  int k = 0;
  bool in_KD = false;
  Vector lambda;       // lambda^k
  Vector lambda_next;  // lambda^{k+1}
  Vector x_hat;        // stale primal read by the coordinator (last read when k is not in K_D)
  Vector nu;           // A x_hat - b
  double E = 0.0;      // ||sigma^k||
  double S = 0.0;      // sum_{kappa <= k} ||sigma^kappa||^2
  Vector x_bar;        // running average over K_D^k
  Vector lambda_bar;   // running average of lambda^{kappa+1} over K_D^k
  int staleness = -1;  // max composite delay k - (source tick) over this tick's reads, -1 off K_D
};

enum class Termination { converged, max_iters };

inline std::string_view to_string(Termination t) { return t == Termination::converged ? "converged" : "max_iters"; }

struct RunTrace {
  std::vector<IterationRecord> records;
  Termination termination = Termination::max_iters;
  int last_iter = 0;
  int coordinator_updates = 0;
  double S = 0.0;
  Vector lambda_final;  // lambda^{last_iter+1}
  Vector x_output;      // agents' latest outputs col{x~_i}
  Vector x_bar;
  Vector lambda_bar;
  int max_staleness = 0;
};

/// Everything an observer may inspect at the end of tick k.
struct TickView {
  int k;
  bool in_KD;
  const Vector& lambda;
  const Vector& lambda_next;
  const Vector& x_hat;
  const Vector& nu;
  const std::vector<int>& composite_delays;  // per agent, valid when in_KD
  double E;
  double S;
};

using TickObserver = std::function<void(const TickView&)>;

/// Asynchronous, inexact dual decomposition on a logical clock.
///
/// At tick k agents on their clock read lambda^{k - delta_d} and solve (inexactly when
/// eps_i > 0); the coordinator, when k is in K_D, reads each agent's output from tick
/// k - delta_p, forms nu^k = A x_hat^k - b and takes a projected step. Off K_D,
/// lambda^{k+1} = lambda^k.
inline RunTrace run(const CoupledProblem& problem, const RunConfig& config, const AsyncSchedule& schedule,
                    const TickObserver& observer = {}) {
  const LipschitzData lips = lipschitz_data(problem);
  validate_config(problem, lips, config);
  if (schedule.num_agents() != problem.num_agents())
    throw ConfigError("schedule has " + std::to_string(schedule.num_agents()) + " agents, problem has " +
                      std::to_string(problem.num_agents()));
  if (schedule.k0 != config.k0) throw ConfigError("schedule k0 differs from config k0");
  if (schedule.horizon < config.max_iters) throw ConfigError("schedule horizon is shorter than max_iters");
  if (const auto violations = validate(schedule); !violations.empty())
    throw ConfigError("invalid schedule: " + violations.front().message);

  const int n_agents = problem.num_agents();
  const int m = problem.num_constraints();
  const int horizon = config.max_iters;

  // Dense per-tick lookup of the schedule.
  std::vector<int> coordinator_index(static_cast<std::size_t>(horizon + 1), -1);
  for (std::size_t s = 0; s < schedule.coordinator_slots.size(); ++s)
    if (schedule.coordinator_slots[s] <= horizon) coordinator_index[schedule.coordinator_slots[s]] = static_cast<int>(s);
  std::vector<std::vector<int>> agent_index(static_cast<std::size_t>(n_agents),
                                            std::vector<int>(static_cast<std::size_t>(horizon + 1), -1));
  for (int i = 0; i < n_agents; ++i)
    for (std::size_t s = 0; s < schedule.agent_slots[i].size(); ++s)
      if (schedule.agent_slots[i][s] <= horizon) agent_index[i][schedule.agent_slots[i][s]] = static_cast<int>(s);

  Rng rng(oracle_seed(config.seed));
  StaleBuffers buffers(n_agents, m, config.k0);

  Vector lambda = config.initial_multiplier(m);
  buffers.publish_dual(0, lambda);

  RunTrace trace;
  Vector x_hat = Vector::Zero(problem.num_vars());
  Vector nu = Vector::Zero(m);
  Vector x_sum = Vector::Zero(problem.num_vars());
  Vector lambda_sum = Vector::Zero(m);
  Vector x_output = Vector::Zero(problem.num_vars());
  std::vector<int> composite(static_cast<std::size_t>(n_agents), 0);
  double S = 0.0;

  for (int k = 0; k <= horizon; ++k) {
    // S1: agents on their clock solve against a stale multiplier.
    for (int i = 0; i < n_agents; ++i) {
      const int s = agent_index[i][k];
      if (s < 0) continue;
      const int source = k - schedule.dual_delays[i][s];
      const Vector& lambda_hat = buffers.read_dual(i, source, k);
      const Vector price = problem.block_matrix(i).transpose() * lambda_hat;
      SubproblemResult result =
          solve_inexact(config.oracle, problem.agent(i), price, config.eps_per_agent[static_cast<std::size_t>(i)], rng);
      problem.slice(x_output, i) = result.x;
      buffers.publish_primal(i, k, source, std::move(result.x));
    }

    // S2: coordinator update.
    const int cs = coordinator_index[k];
    const bool in_KD = cs >= 0;
    Vector lambda_next;
    int staleness = -1;
    if (in_KD) {
      for (int i = 0; i < n_agents; ++i) {
        const int slot = k - schedule.primal_delays[i][cs];
        const auto& entry = buffers.read_primal(i, slot, k);
        problem.slice(x_hat, i) = entry.x;
        composite[i] = k - entry.source_tick;
        staleness = std::max(staleness, composite[i]);
      }
      nu = constraint_residual(problem, x_hat);
      lambda_next = dual_step(lambda, nu, config.alpha);
      x_sum += x_hat;
      lambda_sum += lambda_next;
      ++trace.coordinator_updates;
      trace.max_staleness = std::max(trace.max_staleness, staleness);
    } else {
      lambda_next = lambda;
    }

    // S3: iterative error.
    const double E = (lambda_next - lambda).norm();
    S += E * E;
    if (!lambda_next.allFinite() || !std::isfinite(S))
      throw DivergenceError("non-finite multiplier at iteration " + std::to_string(k));

    const bool converged = config.stop_on_tolerance && in_KD && E <= config.tolerance;
    const bool last = converged || k == horizon;

    if (observer) observer(TickView{k, in_KD, lambda, lambda_next, x_hat, nu, composite, E, S});

    if (k % config.record_every == 0 || last) {
      IterationRecord rec;
      rec.k = k;
      rec.in_KD = in_KD;
      rec.lambda = lambda;
      rec.lambda_next = lambda_next;
      rec.x_hat = x_hat;
      rec.nu = nu;
      rec.E = E;
      rec.S = S;
      const double count = trace.coordinator_updates;
      rec.x_bar = x_sum / count;
      rec.lambda_bar = lambda_sum / count;
      rec.staleness = staleness;
      trace.records.push_back(std::move(rec));
    }

    lambda = std::move(lambda_next);
    if (k < horizon) buffers.publish_dual(k + 1, lambda);
    trace.last_iter = k;
    if (converged) {
      trace.termination = Termination::converged;
      break;
    }
  }

  trace.S = S;
  trace.lambda_final = lambda;
  trace.x_output = x_output;
  trace.x_bar = x_sum / static_cast<double>(trace.coordinator_updates);
  trace.lambda_bar = lambda_sum / static_cast<double>(trace.coordinator_updates);
  return trace;
}

/// Recomputes (x_bar^k, lambda_bar^{k+1}) from the stored records. Needs a trace
/// recorded with record_every = 1.
inline std::pair<Vector, Vector> running_averages(const RunTrace& trace, int k) {
  if (trace.records.empty() || k > trace.records.back().k) throw ConfigError("running_averages: k beyond trace");
  Vector x_sum;
  Vector lambda_sum;
  int count = 0;
  int expected = 0;
  for (const auto& rec : trace.records) {
    if (rec.k > k) break;
    if (rec.k != expected) throw ConfigError("running_averages: trace is thinned (record_every > 1)");
    ++expected;
    if (!rec.in_KD) continue;
    if (count == 0) {
      x_sum = rec.x_hat;
      lambda_sum = rec.lambda_next;
    } else {
      x_sum += rec.x_hat;
      lambda_sum += rec.lambda_next;
    }
    ++count;
  }
  if (count == 0) throw ConfigError("running_averages: no coordinator slot up to k");
  return {x_sum / count, lambda_sum / count};
}

/// Plain synchronous, exact dual decomposition: solve every subproblem at lambda^k,
/// step, stop when ||lambda^{k+1} - lambda^k|| <= tolerance or after tick max_iters.
struct SynchronousRun {
  std::vector<Vector> lambdas;  // lambda^0 .. lambda^{K+1}
  std::vector<Vector> primals;  // x^0 .. x^K
  Termination termination = Termination::max_iters;
};

inline SynchronousRun run_synchronous_exact(const CoupledProblem& problem, double alpha, double tolerance,
                                            int max_iters, const Vector& lambda0, bool stop_on_tolerance = true) {
  SynchronousRun out;
  Vector lambda = lambda0;
  out.lambdas.push_back(lambda);
  for (int k = 0; k <= max_iters; ++k) {
    Vector x(problem.num_vars());
    for (int i = 0; i < problem.num_agents(); ++i) {
      const Vector price = problem.block_matrix(i).transpose() * lambda;
      problem.slice(x, i) = solve_exact(problem.agent(i), price).x;
    }
    Vector next = dual_step(lambda, constraint_residual(problem, x), alpha);
    const double E = (next - lambda).norm();
    out.primals.push_back(std::move(x));
    out.lambdas.push_back(next);
    lambda = std::move(next);
    if (stop_on_tolerance && E <= tolerance) {
      out.termination = Termination::converged;
      break;
    }
  }
  return out;
}

}  // namespace ddopt
