// actmon command line: schedulability checks, deterministic simulation
// runs, rule linting and analysis-vs-simulation cross validation.
//
// Exit codes: 0 success / check passed, 2 negative result (unschedulable,
// lint errors, bound violation, deadline miss with --fail-on-miss),
// 1 usage or input error.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "actmon/rule_parser.hpp"
#include "actmon/rta.hpp"
#include "actmon/scenario.hpp"
#include "actmon/sim.hpp"

namespace {

struct RunOptions {
  std::string scenario_path;
  std::string monitor = "scenario";  // on | off | scenario
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon_ms;
  bool fail_on_miss = false;
};

actmon::Scenario load_with_overrides(const RunOptions& opt) {
  actmon::Scenario s = actmon::load_scenario_file(opt.scenario_path);
  if (opt.monitor == "on") s.monitor_enabled = true;
  if (opt.monitor == "off") s.monitor_enabled = false;
  if (opt.seed) s.seed = *opt.seed;
  if (opt.horizon_ms) s.horizon = actmon::us_from_ms(*opt.horizon_ms);
  if (opt.fail_on_miss) s.fail_on_miss = true;
  if (s.horizon <= 0) throw actmon::ConfigError("scenario has no sim.horizon_ms to run");
  if (s.horizon % s.tick != 0)
    throw actmon::ConfigError("horizon must be a multiple of the tick");
  return s;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw actmon::ConfigError("cannot write " + path.string());
  fn(os);
}

int cmd_check(const std::string& path, const std::string& csv_path) {
  actmon::Scenario s = actmon::load_scenario_file(path);
  actmon::RtaReport report = actmon::analyze(s.tasks, s.check_overhead);
  actmon::print_rta_table(report, std::cout);
  if (!csv_path.empty())
    write_file(csv_path, [&](std::ostream& os) { actmon::write_rta_csv(report, os); });
  return report.schedulable ? 0 : 2;
}

int cmd_run(const RunOptions& opt) {
  actmon::Scenario s = load_with_overrides(opt);
  actmon::SimTrace trace = actmon::run(s);

  std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "decisions.csv", [&](std::ostream& os) { trace.write_decisions_csv(os); });
  write_file(dir / "plant.csv", [&](std::ostream& os) { trace.write_plant_csv(os); });
  write_file(dir / "distance.dat", [&](std::ostream& os) { trace.write_plot_file(os); });
  trace.write_summary(std::cout);
  if (s.fail_on_miss && trace.deadline_misses > 0) {
    std::cerr << "deadline misses recorded and --fail-on-miss set\n";
    return 2;
  }
  return 0;
}

int cmd_lint(const std::string& rules_path, const std::string& scenario_path) {
  std::ifstream in(rules_path);
  if (!in) {
    std::cerr << "cannot open rules file: " << rules_path << "\n";
    return 1;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  actmon::RuleContext ctx;
  bool has_ctx = false;
  if (!scenario_path.empty()) {
    actmon::Scenario s = actmon::load_scenario_file(scenario_path);
    auto plant = s.make_plant();
    for (const auto& sig : plant->signal_names()) ctx.signals.insert(sig);
    for (const auto& a : s.actuators) ctx.actuators[a.id] = a.codec;
    for (const auto& t : s.tasks) ctx.tasks.insert(t.id);
    has_ctx = true;
  }

  try {
    actmon::RuleSet rs = actmon::parse_rules(buf.str(), has_ctx ? &ctx : nullptr);
    for (const auto& warning : actmon::rule_consistency_warnings(rs))
      std::cerr << "warning: " << warning << "\n";
    std::cout << rs.rules.size() << " rule(s) ok\n";
    return 0;
  } catch (const actmon::ParseError& e) {
    std::cerr << rules_path << ":" << e.line << ":" << e.col << ": " << e.expected << "\n";
    return 2;
  }
}

int cmd_cross_validate(const RunOptions& opt) {
  actmon::Scenario s = actmon::load_scenario_file(opt.scenario_path);
  if (opt.horizon_ms) s.horizon = actmon::us_from_ms(*opt.horizon_ms);
  actmon::CrossValidationReport report = actmon::cross_validate(s);

  std::printf("%-12s %12s %12s %10s %s\n", "task", "R_rta(ms)", "R_sim(ms)", "slack", "status");
  for (const auto& row : report.rows) {
    std::string sim =
        row.sim_max_response ? actmon::ms_string(*row.sim_max_response) : std::string("-");
    std::string status = !row.analysis_schedulable ? "unschedulable"
                         : row.violation           ? "VIOLATION"
                                                   : "ok";
    std::printf("%-12s %12s %12s %10s %s\n", row.task.c_str(),
                actmon::ms_string(row.analysis_response).c_str(), sim.c_str(),
                row.sim_max_response && row.analysis_schedulable
                    ? actmon::ms_string(row.slack).c_str()
                    : "-",
                status.c_str());
  }
  std::printf("horizon %s ms, simulated misses %ld, analysis %s, %s\n",
              actmon::ms_string(report.horizon_used).c_str(), report.simulated_misses,
              report.analysis_schedulable ? "schedulable" : "not schedulable",
              report.sound ? "bounds hold" : "BOUNDS VIOLATED");
  return report.sound ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"actuation-monitoring simulator and schedulability analyzer"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string csv_path;
  auto* check = app.add_subcommand("check", "run the response-time analysis on a scenario");
  check->add_option("scenario", scenario_path, "scenario file")->required();
  check->add_option("--csv", csv_path, "also write the report as CSV");

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "simulate a scenario and write trace files");
  run->add_option("scenario", run_opt.scenario_path, "scenario file")->required();
  run->add_option("--monitor", run_opt.monitor, "override the monitor switch: on|off")
      ->check(CLI::IsMember({"on", "off", "scenario"}));
  run->add_option("--out", run_opt.out_dir, "output directory (default: out)");
  run->add_option("--seed", run_opt.seed, "override the scenario seed");
  run->add_option("--horizon-ms", run_opt.horizon_ms, "override the simulation horizon");
  run->add_flag("--fail-on-miss", run_opt.fail_on_miss, "exit 2 if any deadline is missed");

  std::string rules_path;
  std::string lint_scenario;
  auto* lint = app.add_subcommand("lint-rules", "parse and validate an invariant rule file");
  lint->add_option("rules", rules_path, "rule file")->required();
  lint->add_option("--scenario", lint_scenario,
                   "scenario supplying signals/actuators/tasks for semantic checks");

  RunOptions cross_opt;
  auto* cross =
      app.add_subcommand("cross-validate", "compare analysed response times against simulation");
  cross->add_option("scenario", cross_opt.scenario_path, "scenario file")->required();
  cross->add_option("--horizon-ms", cross_opt.horizon_ms,
                    "simulate at least this long (extended to a hyperperiod)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(scenario_path, csv_path);
    if (run->parsed()) return cmd_run(run_opt);
    if (lint->parsed()) return cmd_lint(rules_path, lint_scenario);
    if (cross->parsed()) return cmd_cross_validate(cross_opt);
  } catch (const actmon::ParseError& e) {
    std::cerr << "error at " << e.line << ":" << e.col << ": " << e.expected << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
