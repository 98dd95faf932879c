#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "cprep/experiment.hpp"
#include "cprep/report.hpp"
#include "cprep/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reward-machine transfer workbench"};
  app.set_version_flag("--version", cprep::kVersion);
  app.require_subcommand(1);

  cprep::RunOptions run_options;
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  CLI::App* run = app.add_subcommand("run", "Train one configuration across its seeds");
  run->add_option("--config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Comma-separated override of the config's seed list")
      ->delimiter(',');
  run->add_option("--out", run_options.out,
                  "Output root (overrides the config and " + std::string(cprep::kOutRootEnvVar) +
                      ")");
  run->add_option("--parallel", run_options.parallel, "Worker threads across seeds")
      ->check(CLI::PositiveNumber);

  cprep::ReportOptions report_options;
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  CLI::App* report = app.add_subcommand("report", "Aggregate finished runs into tables");
  report->add_option("dirs", report_dirs, "Run directories (study or seed level)")
      ->required()
      ->expected(-1);
  report->add_flag("--svg", report_options.svg, "Also draw the threshold curves as SVG");
  report->add_option("--out", report_out, "Directory for report artifacts");

  CLI::App* rm = app.add_subcommand("rm", "Inspect a machine file");
  rm->require_subcommand(1);
  std::string rm_file;
  double gamma = 0.99;
  CLI::App* validate = rm->add_subcommand("validate", "Parse and audit the machine");
  validate->add_option("file", rm_file, "Machine file")->required();
  CLI::App* viz = rm->add_subcommand("viz", "Emit Graphviz DOT");
  viz->add_option("file", rm_file, "Machine file")->required();
  CLI::App* plan = rm->add_subcommand("plan", "Print optimal state values and transitions");
  plan->add_option("file", rm_file, "Machine file")->required();
  plan->add_option("--gamma", gamma, "Discount factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    run_options.config_path = config_path;
    run_options.seeds = seeds;
    return cprep::cmd_run(run_options, std::cout, std::cerr);
  }
  if (report->parsed()) {
    for (const std::string& dir : report_dirs) report_options.run_dirs.emplace_back(dir);
    report_options.out_dir = report_out;
    return cprep::cmd_report(report_options, std::cout, std::cerr);
  }
  if (validate->parsed()) return cprep::cmd_rm_validate(rm_file, std::cout, std::cerr);
  if (viz->parsed()) return cprep::cmd_rm_viz(rm_file, std::cout, std::cerr);
  return cprep::cmd_rm_plan(rm_file, gamma, std::cout, std::cerr);
}
