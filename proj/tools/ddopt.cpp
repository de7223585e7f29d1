// ddopt: run asynchronous dual decomposition experiments and compare them against
// their convergence envelopes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddopt/ddopt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStepSize = 3;
constexpr int kExitDivergence = 4;

struct ConfigOptions {
  std::string problem = "num";
  std::string scenario;
  std::string config_file;
  std::optional<double> alpha;
  std::optional<int> k0;
  std::optional<double> eps_D;
  std::optional<double> tolerance;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<int> record_every;
  std::optional<std::string> oracle;
  std::optional<bool> stop;

  void attach(CLI::App* cmd) {
    cmd->add_option("--problem", problem, "built-in problem name (num) or path to a problem JSON file");
    cmd->add_option("--scenario", scenario, "base configuration: sync_exact, async_exact, sync_inexact, async_inexact");
    cmd->add_option("--config", config_file, "run configuration JSON file applied on top of the scenario");
    cmd->add_option("--alpha", alpha, "dual step size");
    cmd->add_option("--k0", k0, "delay bound");
    cmd->add_option("--eps-D", eps_D, "total inexactness budget, split equally across agents");
    cmd->add_option("--tolerance", tolerance, "stop once ||lambda^{k+1} - lambda^k|| <= tolerance (with --stop-on-tolerance)");
    cmd->add_option("--max-iters", max_iters, "last iteration index");
    cmd->add_option("--seed", seed, "schedule and oracle seed");
    cmd->add_option("--record-every", record_every, "record every r-th iteration (plus the last)");
    cmd->add_option("--oracle", oracle, "inexact oracle: level-set or worst-case");
    cmd->add_option("--stop-on-tolerance", stop, "stop once the tolerance is met (true/false)");
  }

  struct Resolved {
    std::string source;
    ddopt::CoupledProblem problem;
    ddopt::RunConfig config;
  };

  // Scenario first, then the config file, then individual flags.
  Resolved resolve() const {
    std::string source = problem;
    nlohmann::json file_json;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ddopt::ConfigError("cannot read config " + config_file);
      try {
        in >> file_json;
      } catch (const nlohmann::json::exception& e) {
        throw ddopt::ConfigError(config_file + ": " + e.what());
      }
      if (file_json.contains("problem") && problem == "num") source = file_json.at("problem").get<std::string>();
    }
    std::string base = scenario;
    if (base.empty() && file_json.contains("scenario")) base = file_json.at("scenario").get<std::string>();

    ddopt::CoupledProblem p = ddopt::resolve_problem(source);
    ddopt::RunConfig config = ddopt::base_config(base, p.num_agents());
    if (!base.empty() && static_cast<int>(config.eps_per_agent.size()) != p.num_agents()) {
      const double total = config.eps_D();
      config.eps_per_agent.assign(p.num_agents(), total / p.num_agents());
    }
    if (!file_json.is_null()) ddopt::apply_config_json(config, file_json, p.num_agents());
    if (alpha) config.alpha = *alpha;
    if (k0) config.k0 = *k0;
    if (eps_D) config.eps_per_agent.assign(p.num_agents(), *eps_D / p.num_agents());
    if (tolerance) config.tolerance = *tolerance;
    if (max_iters) config.max_iters = *max_iters;
    if (seed) config.seed = *seed;
    if (record_every) config.record_every = *record_every;
    if (oracle) config.oracle = ddopt::parse_oracle(*oracle);
    if (stop) config.stop_on_tolerance = *stop;
    return {source, std::move(p), std::move(config)};
  }

  std::string label() const { return scenario; }

  bool describes_run() const { return !scenario.empty() || !config_file.empty() || alpha.has_value(); }
};

int cmd_run(const ConfigOptions& opts, const std::string& out, const std::string& schedule_out) {
  auto [source, problem, config] = opts.resolve();
  ddopt::ExperimentSpec spec;
  spec.problem_source = source;
  spec.scenario = opts.label();
  spec.config = config;
  spec.output = out;
  if (!schedule_out.empty()) spec.schedule_output = schedule_out;
  spec.cache_dir = ddopt::cache_dir_from_env();
  const auto result = ddopt::run_experiment(spec);
  const auto& last = result.rows.back();
  std::cerr << "wrote " << result.rows.size() << " rows to " << out << " (termination "
            << ddopt::to_string(result.trace.termination) << " at k=" << result.trace.last_iter
            << ", violation " << last.violation_measured << ")\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& csvs, const std::string& out) {
  std::vector<ddopt::ScenarioSummary> summaries;
  for (const auto& path : csvs) summaries.push_back(ddopt::load_summary(path));
  const std::string text = ddopt::make_report(summaries);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out);
    if (!os) throw ddopt::ConfigError("cannot write " + out);
    os << text;
  }
  return kExitOk;
}

int cmd_reference(const std::string& source) {
  const auto problem = ddopt::resolve_problem(source);
  const auto lips = ddopt::lipschitz_data(problem);
  const auto ref = ddopt::cached_reference(problem, lips, ddopt::cache_dir_from_env());
  auto j = ddopt::reference_to_json(ref, ddopt::problem_hash(problem));
  const ddopt::Vector residual = ddopt::constraint_residual(problem, ref.x_star);
  j["feasibility_residual"] = residual.cwiseMax(0.0).norm();
  j["complementary_slackness"] = std::abs(ref.lambda_star.dot(residual));
  j["L_D"] = lips.L_D;
  j["c_F"] = lips.c_F;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_validate(const ConfigOptions& opts, const std::string& schedule_path) {
  int status = kExitOk;
  if (!schedule_path.empty()) {
    std::ifstream in(schedule_path);
    if (!in) throw ddopt::ConfigError("cannot read schedule " + schedule_path);
    const auto schedule = ddopt::read_schedule(in);
    const auto violations = ddopt::validate(schedule);
    for (const auto& v : violations)
      std::cout << "schedule: " << v.clock << " slot " << v.slot << ": " << v.message << '\n';
    if (violations.empty())
      std::cout << "schedule ok (horizon " << schedule.horizon << ", k0 " << schedule.k0 << ")\n";
    else
      status = kExitConfig;
  }
  if (!schedule_path.empty() && !opts.describes_run()) return status;
  const auto [source, problem, config] = opts.resolve();
  const auto lips = ddopt::lipschitz_data(problem);
  ddopt::validate_config(problem, lips, config);
  std::cout << "config ok: alpha " << config.alpha << " < " << ddopt::max_step_size(lips, config.k0) << " (k0 "
            << config.k0 << ", L_D " << lips.L_D << ")\n";
  return status;
}

int cmd_export(const std::string& source, const std::string& out) {
  ddopt::save_problem(ddopt::resolve_problem(source), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous inexact dual decomposition experiments"};
  app.require_subcommand(1);

  ConfigOptions run_opts;
  std::string run_out;
  std::string run_schedule;
  auto* run = app.add_subcommand("run", "run one experiment and write a CSV trace");
  run_opts.attach(run);
  run->add_option("--out,-o", run_out, "CSV output path")->required();
  run->add_option("--schedule-out", run_schedule, "also write the generated schedule");

  std::vector<std::string> report_csvs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "compare traces against their envelopes");
  report->add_option("csv", report_csvs, "CSV traces written by 'run'")->required();
  report->add_option("--out,-o", report_out, "write the markdown report here instead of stdout");

  std::string ref_problem = "num";
  auto* reference = app.add_subcommand("reference", "print the (cached) optimal primal/dual pair");
  reference->add_option("--problem", ref_problem, "built-in problem name (num) or problem JSON path");

  ConfigOptions validate_opts;
  std::string validate_schedule;
  auto* validate = app.add_subcommand("validate", "check a run configuration and optionally a schedule file");
  validate_opts.attach(validate);
  validate->add_option("--schedule", validate_schedule, "schedule file to check");

  std::string export_problem = "num";
  std::string export_out;
  auto* exporter = app.add_subcommand("export-problem", "write a problem as JSON");
  exporter->add_option("--problem", export_problem, "built-in problem name or problem JSON path");
  exporter->add_option("--out,-o", export_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts, run_out, run_schedule);
    if (*report) return cmd_report(report_csvs, report_out);
    if (*reference) return cmd_reference(ref_problem);
    if (*validate) return cmd_validate(validate_opts, validate_schedule);
    if (*exporter) return cmd_export(export_problem, export_out);
  } catch (const ddopt::StepSizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStepSize;
  } catch (const ddopt::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ddopt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
