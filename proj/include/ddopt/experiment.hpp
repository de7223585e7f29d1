#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ddopt/bounds.hpp"
#include "ddopt/engine.hpp"
#include "ddopt/error.hpp"
#include "ddopt/num.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/problem_io.hpp"
#include "ddopt/reference.hpp"
#include "ddopt/schedule.hpp"

namespace ddopt {

/// One CSV row: measured quantity next to its theoretical envelope.
struct TraceRow {
  int k = 0;
  bool in_KD = false;
  double E = 0.0;
  double sqrtS_measured = 0.0;
  double sqrtS_bound = 0.0;
  double lambda_norm_measured = 0.0;
  double lambda_norm_bound = 0.0;
  double violation_measured = 0.0;
  double violation_bound = 0.0;
  double primal_dev_measured = 0.0;
  double primal_lower_bound = 0.0;
  double primal_upper_bound = 0.0;
  double dual_dev_measured = 0.0;
  double dual_bound = 0.0;
  double xdev_measured = 0.0;
  double xdev_bound = 0.0;
};

inline constexpr std::array<std::string_view, 16> kCsvColumns = {
    "k",
    "in_KD",
    "E_k",
    "sqrtS_measured",
    "sqrtS_bound",
    "lambda_norm_measured",
    "lambda_norm_bound",
    "violation_measured",
    "violation_bound",
    "primal_dev_measured",
    "primal_lower_bound",
    "primal_upper_bound",
    "dual_dev_measured",
    "dual_bound",
    "xdev_measured",
    "xdev_bound",
};

inline TraceRow evaluate_record(const CoupledProblem& problem, const ReferenceSolution& ref, const BoundConstants& consts,
                                const IterationRecord& rec) {
  TraceRow row;
  row.k = rec.k;
  row.in_KD = rec.in_KD;
  row.E = rec.E;
  row.sqrtS_measured = std::sqrt(rec.S);
  row.sqrtS_bound = envelope_S(consts, rec.k);
  row.lambda_norm_measured = rec.lambda_next.norm();
  row.lambda_norm_bound = envelope_lambda_norm(consts, rec.S, rec.k);
  const Metrics m = metrics(ref, problem, rec.x_bar, rec.lambda_bar);
  row.violation_measured = m.violation_norm;
  row.violation_bound = envelope_violation(consts, rec.k);
  row.primal_dev_measured = m.primal_dev;
  std::tie(row.primal_lower_bound, row.primal_upper_bound) = envelope_primal(consts, rec.k);
  row.dual_dev_measured = m.dual_dev;
  row.dual_bound = envelope_dual(consts, rec.k);
  row.xdev_measured = m.xdev_sq;
  row.xdev_bound = envelope_xdev(consts, rec.k);
  return row;
}

inline std::vector<TraceRow> evaluate_trace(const CoupledProblem& problem, const ReferenceSolution& ref,
                                            const BoundConstants& consts, const RunTrace& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.records.size());
  for (const auto& rec : trace.records) rows.push_back(evaluate_record(problem, ref, consts, rec));
  return rows;
}

// CSV

namespace detail {

/// Shortest decimal that parses back to the same double.
inline void put_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  out.append(buf, end);
}

inline double parse_number(std::string_view text, std::size_t line) {
  std::string copy(text);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size())
    throw ConfigError("csv line " + std::to_string(line) + ": bad number '" + copy + "'");
  return v;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  std::string line;
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c) line += ',';
    line += kCsvColumns[c];
  }
  os << line << '\n';
  for (const auto& r : rows) {
    line = std::to_string(r.k);
    line += r.in_KD ? ",1" : ",0";
    for (double v : {r.E, r.sqrtS_measured, r.sqrtS_bound, r.lambda_norm_measured, r.lambda_norm_bound,
                     r.violation_measured, r.violation_bound, r.primal_dev_measured, r.primal_lower_bound,
                     r.primal_upper_bound, r.dual_dev_measured, r.dual_bound, r.xdev_measured, r.xdev_bound}) {
      line += ',';
      detail::put_number(line, v);
    }
    os << line << '\n';
  }
}

inline std::vector<TraceRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: empty file");
  std::string header;
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c) header += ',';
    header += kCsvColumns[c];
  }
  if (line != header) throw ConfigError("csv: unexpected header");
  std::vector<TraceRow> rows;
  std::size_t number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      values.push_back(detail::parse_number(std::string_view(line).substr(start, comma - start), number));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (values.size() != kCsvColumns.size())
      throw ConfigError("csv line " + std::to_string(number) + ": expected " + std::to_string(kCsvColumns.size()) +
                        " fields");
    TraceRow r;
    r.k = static_cast<int>(values[0]);
    r.in_KD = values[1] != 0.0;
    double* fields[] = {&r.E, &r.sqrtS_measured, &r.sqrtS_bound, &r.lambda_norm_measured, &r.lambda_norm_bound,
                        &r.violation_measured, &r.violation_bound, &r.primal_dev_measured, &r.primal_lower_bound,
                        &r.primal_upper_bound, &r.dual_dev_measured, &r.dual_bound, &r.xdev_measured, &r.xdev_bound};
    for (std::size_t f = 0; f < std::size(fields); ++f) *fields[f] = values[f + 2];
    rows.push_back(r);
  }
  return rows;
}

// Envelope dominance.

enum class Quantity { sqrtS, lambda_norm, violation, primal, dual, xdev };

inline constexpr std::array<Quantity, 6> kQuantities = {Quantity::sqrtS,  Quantity::lambda_norm, Quantity::violation,
                                                        Quantity::primal, Quantity::dual,        Quantity::xdev};

inline std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::sqrtS: return "sqrtS";
    case Quantity::lambda_norm: return "lambda_norm";
    case Quantity::violation: return "violation";
    case Quantity::primal: return "primal_dev";
    case Quantity::dual: return "dual_dev";
    case Quantity::xdev: return "xdev";
  }
  return "?";
}

inline constexpr double kDominanceSlack = 1e-9;

inline bool within(double measured, double bound) {
  return measured <= bound + kDominanceSlack * std::max(1.0, std::abs(bound));
}

/// True when the row's measured value lies inside its envelope.
inline bool dominated(const TraceRow& r, Quantity q) {
  switch (q) {
    case Quantity::sqrtS: return within(r.sqrtS_measured, r.sqrtS_bound);
    case Quantity::lambda_norm: return within(r.lambda_norm_measured, r.lambda_norm_bound);
    case Quantity::violation: return within(r.violation_measured, r.violation_bound);
    case Quantity::primal:
      return within(r.primal_dev_measured, r.primal_upper_bound) && within(r.primal_lower_bound, r.primal_dev_measured);
    case Quantity::dual: return within(r.dual_dev_measured, r.dual_bound) && r.dual_dev_measured >= -kDominanceSlack;
    case Quantity::xdev: return within(r.xdev_measured, r.xdev_bound);
  }
  return false;
}

struct DominanceSummary {
  std::array<long, 6> failures{};  // indexed like kQuantities
  std::array<int, 6> first_failure{-1, -1, -1, -1, -1, -1};

  long total() const {
    long t = 0;
    for (long f : failures) t += f;
    return t;
  }
};

inline DominanceSummary check_dominance(const std::vector<TraceRow>& rows) {
  DominanceSummary s;
  for (const auto& r : rows) {
    for (std::size_t q = 0; q < kQuantities.size(); ++q) {
      if (dominated(r, kQuantities[q])) continue;
      if (s.failures[q]++ == 0) s.first_failure[q] = r.k;
    }
  }
  return s;
}

/// Least-squares slope of log(value) against log(k) over rows with k in [k_lo, k_hi]
/// and a positive value. NaN when fewer than two points qualify.
template <typename Getter>
double loglog_slope(const std::vector<TraceRow>& rows, int k_lo, int k_hi, Getter value) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    if (r.k < k_lo || r.k > k_hi || r.k <= 0) continue;
    const double y = value(r);
    if (!(y > 0.0) || !std::isfinite(y)) continue;
    const double lx = std::log(static_cast<double>(r.k));
    const double ly = std::log(y);
    n += 1;
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom <= 0.0) return std::nan("");
  return (n * sxy - sx * sy) / denom;
}

// Experiments.

/// What to run: a problem source, a run configuration and where to write results.
struct ExperimentSpec {
  std::string problem_source = "num";  // "num" or a path to a problem file
  std::string scenario;                // informational label, e.g. "async_exact"
  RunConfig config;
  std::filesystem::path output;  // CSV path; "<output>.meta.json" is written alongside
  std::optional<std::filesystem::path> schedule_output;
  std::optional<std::filesystem::path> cache_dir;
};

inline CoupledProblem resolve_problem(const std::string& source) {
  if (source == "num") return num::build_num();
  return load_problem(source);
}

/// Applies the keys present in `j` on top of `config`. Recognized keys: alpha, k0,
/// eps_per_agent (array), eps_D (split equally over agents), tolerance, max_iters,
/// seed, record_every, lambda0, oracle ("worst-case" | "level-set"), stop_on_tolerance.
inline void apply_config_json(RunConfig& config, const nlohmann::json& j, int n_agents) {
  static const char* known[] = {"problem", "scenario",     "alpha",  "k0",           "eps_per_agent",
                                "eps_D",   "tolerance",    "max_iters", "seed",      "record_every",
                                "lambda0", "oracle",       "stop_on_tolerance"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return item.key() == k; }) ==
        std::end(known))
      throw ConfigError("unknown run config key '" + item.key() + "'");
  }
  try {
    if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
    if (j.contains("k0")) config.k0 = j.at("k0").get<int>();
    if (j.contains("eps_per_agent") && j.contains("eps_D")) throw ConfigError("give eps_per_agent or eps_D, not both");
    if (j.contains("eps_per_agent")) config.eps_per_agent = j.at("eps_per_agent").get<std::vector<double>>();
    if (j.contains("eps_D")) config.eps_per_agent.assign(n_agents, j.at("eps_D").get<double>() / n_agents);
    if (j.contains("tolerance")) config.tolerance = j.at("tolerance").get<double>();
    if (j.contains("max_iters")) config.max_iters = j.at("max_iters").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("record_every")) config.record_every = j.at("record_every").get<int>();
    if (j.contains("lambda0")) config.lambda0 = detail::json_vector(j.at("lambda0"), "lambda0");
    if (j.contains("oracle")) config.oracle = parse_oracle(j.at("oracle").get<std::string>());
    if (j.contains("stop_on_tolerance")) config.stop_on_tolerance = j.at("stop_on_tolerance").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

/// Base configuration for a problem: a named scenario, or defaults with zero budgets.
inline RunConfig base_config(const std::string& scenario_name, int n_agents) {
  if (!scenario_name.empty()) return num::scenario(scenario_name);
  RunConfig config;
  config.eps_per_agent.assign(n_agents, 0.0);
  return config;
}

struct ExperimentResult {
  RunTrace trace;
  ReferenceSolution reference;
  BoundConstants constants;
  std::vector<TraceRow> rows;
  std::string problem_hash;
};

/// Runs one experiment in memory.
inline ExperimentResult execute(const CoupledProblem& problem, const RunConfig& config,
                                const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                AsyncSchedule* schedule_out = nullptr) {
  const LipschitzData lips = lipschitz_data(problem);
  validate_config(problem, lips, config);
  const AsyncSchedule schedule = generate_schedule(problem.num_agents(), config.max_iters, config.k0, config.seed);
  if (schedule_out) *schedule_out = schedule;

  ExperimentResult out;
  out.problem_hash = problem_hash(problem);
  out.trace = run(problem, config, schedule);
  out.reference = cached_reference(problem, lips, cache_dir);
  out.constants = compute_constants(problem, lips, config, out.reference);
  out.rows = evaluate_trace(problem, out.reference, out.constants, out.trace);
  return out;
}

inline std::filesystem::path meta_path(const std::filesystem::path& csv) { return csv.string() + ".meta.json"; }

inline nlohmann::json experiment_meta(const ExperimentSpec& spec, const ExperimentResult& result) {
  const auto& c = spec.config;
  const auto& k = result.constants;
  return {{"scenario", spec.scenario},
          {"problem", spec.problem_source},
          {"problem_hash", result.problem_hash},
          {"alpha", c.alpha},
          {"k0", c.k0},
          {"eps_per_agent", c.eps_per_agent},
          {"eps_D", c.eps_D()},
          {"seed", c.seed},
          {"max_iters", c.max_iters},
          {"record_every", c.record_every},
          {"oracle", std::string(to_string(c.oracle))},
          {"termination", std::string(to_string(result.trace.termination))},
          {"last_iter", result.trace.last_iter},
          {"max_composite_staleness", result.trace.max_staleness},
          {"constants",
           {{"gamma_alpha", k.gamma_alpha},
            {"L_D", k.L_D},
            {"c_F", k.c_F},
            {"D_star", k.D_star},
            {"D_zero", k.D_zero},
            {"lambda_star_norm", k.lambda_star_norm},
            {"M_half", k.M_half},
            {"M_one", k.M_one},
            {"N_zero", k.N_zero},
            {"N_half", k.N_half},
            {"N_one", k.N_one},
            {"N_one_prime", k.N_one_prime}}}};
}

/// Runs the experiment and writes the CSV trace plus its metadata sidecar.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const CoupledProblem problem = resolve_problem(spec.problem_source);
  AsyncSchedule schedule;
  ExperimentResult result = execute(problem, spec.config, spec.cache_dir, &schedule);

  std::ofstream csv(spec.output);
  if (!csv) throw ConfigError("cannot write " + spec.output.string());
  write_csv(csv, result.rows);

  std::ofstream meta(meta_path(spec.output));
  if (!meta) throw ConfigError("cannot write " + meta_path(spec.output).string());
  meta << experiment_meta(spec, result).dump(2) << '\n';

  if (spec.schedule_output) {
    std::ofstream sched(*spec.schedule_output);
    if (!sched) throw ConfigError("cannot write " + spec.schedule_output->string());
    write_schedule(sched, schedule);
  }
  return result;
}

// Four-scenario report.

struct ScenarioSummary {
  std::string name;
  std::string problem_hash;
  TraceRow final_row;
  DominanceSummary dominance;
  double violation_slope = 0.0;
  double primal_slope = 0.0;
  double dual_slope = 0.0;
  double xdev_slope = 0.0;
  double sqrtS_slope = 0.0;
};

inline ScenarioSummary summarize(std::string name, std::string hash, const std::vector<TraceRow>& rows) {
  if (rows.empty()) throw ConfigError("trace '" + name + "' has no rows");
  ScenarioSummary s;
  s.name = std::move(name);
  s.problem_hash = std::move(hash);
  s.final_row = rows.back();
  s.dominance = check_dominance(rows);
  const int hi = rows.back().k;
  const int lo = std::max(1, hi / 10);
  s.violation_slope = loglog_slope(rows, lo, hi, [](const TraceRow& r) { return r.violation_measured; });
  s.primal_slope = loglog_slope(rows, lo, hi, [](const TraceRow& r) { return std::abs(r.primal_dev_measured); });
  s.dual_slope = loglog_slope(rows, lo, hi, [](const TraceRow& r) { return r.dual_dev_measured; });
  s.xdev_slope = loglog_slope(rows, lo, hi, [](const TraceRow& r) { return r.xdev_measured; });
  s.sqrtS_slope = loglog_slope(rows, lo, hi, [](const TraceRow& r) { return r.sqrtS_measured; });
  return s;
}

inline ScenarioSummary load_summary(const std::filesystem::path& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw ConfigError("cannot read " + csv_path.string());
  const auto rows = read_csv(csv);
  std::string name = csv_path.stem().string();
  std::string hash;
  if (std::ifstream meta(meta_path(csv_path)); meta) {
    nlohmann::json j;
    try {
      meta >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(meta_path(csv_path).string() + ": " + e.what());
    }
    if (auto label = j.value("scenario", std::string()); !label.empty()) name = label;
    hash = j.value("problem_hash", std::string());
  }
  return summarize(std::move(name), std::move(hash), rows);
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << std::scientific << v;
  return os.str();
}

inline std::string format_slope(double v) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os << std::setprecision(3) << std::fixed << v;
  return os.str();
}

/// Markdown comparison of several traces. Throws ConfigError if the traces were
/// produced from different problems.
inline std::string make_report(const std::vector<ScenarioSummary>& summaries) {
  std::string hash;
  for (const auto& s : summaries) {
    if (s.problem_hash.empty()) continue;
    if (hash.empty())
      hash = s.problem_hash;
    else if (s.problem_hash != hash)
      throw ConfigError("traces come from different problems (" + hash + " vs " + s.problem_hash + ")");
  }

  std::ostringstream os;
  os << "# Scenario comparison\n\n";
  if (!hash.empty()) os << "Problem hash: `" << hash << "`\n\n";

  os << "## Final metrics\n\n";
  os << "| scenario | k | sqrt(S) | violation | F(x_bar)-F* | D*-D(lambda_bar) | ||x_bar-x*||^2 |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& s : summaries) {
    const auto& r = s.final_row;
    os << "| " << s.name << " | " << r.k << " | " << format_value(r.sqrtS_measured) << " | "
       << format_value(r.violation_measured) << " | " << format_value(r.primal_dev_measured) << " | "
       << format_value(r.dual_dev_measured) << " | " << format_value(r.xdev_measured) << " |\n";
  }

  os << "\n## Envelope dominance\n\n";
  os << "| scenario |";
  for (auto q : kQuantities) os << ' ' << to_string(q) << " |";
  os << "\n|---|";
  for (std::size_t q = 0; q < kQuantities.size(); ++q) os << "---|";
  os << '\n';
  for (const auto& s : summaries) {
    os << "| " << s.name << " |";
    for (std::size_t q = 0; q < kQuantities.size(); ++q) {
      if (s.dominance.failures[q] == 0)
        os << " PASS |";
      else
        os << " FAIL (" << s.dominance.failures[q] << " rows, first k=" << s.dominance.first_failure[q] << ") |";
    }
    os << '\n';
  }

  os << "\n## Observed decay exponents (final decade, log-log least squares)\n\n";
  os << "| scenario | sqrt(S) | violation | |F(x_bar)-F*| | D*-D(lambda_bar) | ||x_bar-x*||^2 |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& s : summaries) {
    os << "| " << s.name << " | " << format_slope(s.sqrtS_slope) << " | " << format_slope(s.violation_slope) << " | "
       << format_slope(s.primal_slope) << " | " << format_slope(s.dual_slope) << " | " << format_slope(s.xdev_slope)
       << " |\n";
  }
  return os.str();
}

}  // namespace ddopt
