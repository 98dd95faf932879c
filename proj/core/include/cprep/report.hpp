#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace cprep {

struct ReportOptions {
  std::vector<std::filesystem::path> run_dirs;  ///< study or seed directories
  std::filesystem::path out_dir = "report";
  bool svg = false;  ///< also emit a threshold-curve line plot
};

/// Aggregates completed runs into transfer-quality tables.  Accepts study
/// directories (containing one subdirectory per seed) or seed directories
/// directly.  Emits, under out_dir: report_table.txt (also printed to `out`),
/// report_table.csv, utilities.json, one ttt_curve_<name>.csv per
/// configuration, and optionally ttt_curves.svg.  Rows pair a utility
/// (TTT_AUC, JS, TR) with a task family; columns are configurations.
/// Returns 0 on success and 2 when inputs are missing, unreadable, or
/// incompatible (mixed threshold grids, or mixed map sizes within one task
/// family).
int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

/// Parses a machine file and prints a structural summary plus any soft
/// findings (unreachable states, overlapping guards).  Returns 0 when the
/// file parses, 2 on parse or hard-validation failure.
int cmd_rm_validate(const std::filesystem::path& file, std::ostream& out, std::ostream& err);

/// Prints the machine in Graphviz DOT form.  Returns 0, or 2 on parse
/// failure.
int cmd_rm_viz(const std::filesystem::path& file, std::ostream& out, std::ostream& err);

/// Prints the optimal value of every machine state at the given discount,
/// with the greedy outgoing transitions.  Returns 0, 2 on parse failure or
/// invalid discount, 1 when value iteration fails to converge.
int cmd_rm_plan(const std::filesystem::path& file, double gamma, std::ostream& out,
                std::ostream& err);

}  // namespace cprep
