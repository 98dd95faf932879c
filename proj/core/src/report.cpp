#include "cprep/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "cprep/experiment.hpp"
#include "cprep/metrics.hpp"
#include "cprep/numeric_text.hpp"
#include "cprep/rm_planning.hpp"
#include "cprep/rm_text.hpp"

namespace cprep {
namespace {

namespace fs = std::filesystem;

/// Stable 64-bit string hash (FNV-1a) used to seed the bootstrap streams, so
/// report output does not depend on directory traversal order.
std::uint64_t stable_hash(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  return hash;
}

struct SeedRun {
  fs::path dir;
  std::string config_name;
  std::string cmdp_label;  ///< "<env>/<space>"
  std::string representation;
  ConfigJson config;  ///< snapshot with "seeds"/"out" erased, for comparison
  std::uint64_t seed = 0;
  int threshold_grid = 51;
  int grid_width = 6;
  int grid_height = 6;
  TrainingHistory transferred;
  TrainingHistory target;
};

int require_int(const ConfigJson& json, const char* key, const fs::path& where) {
  auto it = json.find(key);
  if (it == json.end() || !it->is_number_integer()) {
    throw std::invalid_argument("manifest " + where.string() + " lacks integer field '" + key +
                                "'");
  }
  return it->get<int>();
}

std::string require_text(const ConfigJson& json, const char* key, const fs::path& where) {
  auto it = json.find(key);
  if (it == json.end() || !it->is_string()) {
    throw std::invalid_argument("manifest " + where.string() + " lacks string field '" + key +
                                "'");
  }
  return it->get<std::string>();
}

SeedRun load_seed_run(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream stream(manifest_path, std::ios::binary);
  if (!stream) {
    throw std::invalid_argument("cannot read " + manifest_path.string());
  }
  ConfigJson manifest;
  try {
    manifest = ConfigJson::parse(stream);
  } catch (const nlohmann::json::parse_error& error) {
    throw std::invalid_argument("manifest JSON parse error in " + manifest_path.string() + ": " +
                                error.what());
  }

  auto config_it = manifest.find("config");
  if (config_it == manifest.end() || !config_it->is_object()) {
    throw std::invalid_argument("manifest " + manifest_path.string() +
                                " lacks object field 'config'");
  }

  SeedRun run;
  run.dir = dir;
  run.config = *config_it;
  run.config_name = require_text(run.config, "name", manifest_path);
  run.cmdp_label = require_text(run.config, "env", manifest_path) + "/" +
                   require_text(run.config, "context_space", manifest_path);
  run.representation = require_text(run.config, "representation", manifest_path);
  run.threshold_grid = require_int(run.config, "threshold_grid", manifest_path);
  run.grid_width = require_int(run.config, "grid_width", manifest_path);
  run.grid_height = require_int(run.config, "grid_height", manifest_path);
  run.config.erase("seeds");
  run.config.erase("out");

  auto seed_it = manifest.find("seed");
  if (seed_it == manifest.end() || !seed_it->is_number_integer()) {
    throw std::invalid_argument("manifest " + manifest_path.string() +
                                " lacks integer field 'seed'");
  }
  run.seed = seed_it->get<std::uint64_t>();

  run.transferred = read_history_csv(dir / "history_transferred.csv");
  run.target = read_history_csv(dir / "history_target.csv");
  return run;
}

/// Expands study directories into seed directories (those holding a
/// manifest); deduplicates; warns about and skips failed seeds.
std::vector<fs::path> collect_seed_dirs(const std::vector<fs::path>& inputs, std::ostream& err) {
  std::vector<fs::path> dirs;
  std::set<std::string> taken;
  auto add = [&](const fs::path& dir) {
    std::error_code ec;
    fs::path canon = fs::weakly_canonical(dir, ec);
    if (ec) canon = dir;
    if (taken.insert(canon.string()).second) dirs.push_back(dir);
  };

  for (const fs::path& input : inputs) {
    if (!fs::exists(input)) {
      throw std::invalid_argument("run directory does not exist: " + input.string());
    }
    if (fs::exists(input / "manifest.json")) {
      add(input);
      continue;
    }
    std::vector<fs::path> children;
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
        children.push_back(entry.path());
      }
    }
    if (children.empty()) {
      throw std::invalid_argument("no run manifests under " + input.string());
    }
    std::sort(children.begin(), children.end());
    for (const fs::path& child : children) add(child);
  }

  std::vector<fs::path> usable;
  for (const fs::path& dir : dirs) {
    if (fs::exists(dir / kFailureMarker)) {
      err << "warning: skipping failed run " << dir.string() << '\n';
      continue;
    }
    usable.push_back(dir);
  }
  if (usable.empty()) {
    throw std::invalid_argument("no completed runs to report");
  }
  return usable;
}

struct Aggregate {
  std::vector<double> values;  ///< one per seed, seed-sorted
  double iqm = 0.0;
  double std_dev = 0.0;
  ConfidenceInterval ci;
};

Aggregate aggregate_values(const std::vector<double>& values, const std::string& stream_name) {
  Aggregate aggregate;
  aggregate.values = values;
  aggregate.iqm = interquartile_mean(values);
  aggregate.std_dev = sample_std(values);
  RandomStream rng(mix_seed(stable_hash(stream_name), 0));
  aggregate.ci = stratified_bootstrap_ci({values}, rng);
  return aggregate;
}

struct ConfigGroup {
  std::string name;
  std::string cmdp_label;
  std::string representation;
  int threshold_grid = 51;
  std::vector<SeedRun> runs;  ///< sorted by seed
  Aggregate ttt_auc;
  Aggregate js;
  Aggregate tr;
  std::vector<Aggregate> ttt_curve;  ///< one per threshold
};

/// JSON value for a statistic: plain number when finite, text otherwise
/// (JSON has no literal for infinities).
ConfigJson json_number(double value) {
  if (std::isfinite(value)) return value;
  return format_double(value);
}

ConfigJson aggregate_json(const Aggregate& aggregate) {
  ConfigJson values = ConfigJson::array();
  for (double value : aggregate.values) values.push_back(json_number(value));
  ConfigJson json;
  json["values"] = values;
  json["iqm"] = json_number(aggregate.iqm);
  json["std"] = json_number(aggregate.std_dev);
  json["ci_low"] = json_number(aggregate.ci.low);
  json["ci_high"] = json_number(aggregate.ci.high);
  return json;
}

std::string cell_text(const Aggregate& aggregate) {
  return format_sig6(aggregate.iqm) + " ±" + format_sig6(aggregate.std_dev) + " [" +
         format_sig6(aggregate.ci.low) + ", " + format_sig6(aggregate.ci.high) + "]";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  stream << text;
  if (!stream) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::string text;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      text += row[i];
      if (i + 1 < row.size()) {
        text.append(widths[i] - row[i].size() + 2, ' ');
      }
    }
    text += '\n';
  }
  return text;
}

std::string svg_plot(const std::vector<ConfigGroup>& groups, const std::vector<double>& grid) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double left = 70.0, top = 20.0, plot_w = 440.0, plot_h = 380.0;
  const double width = 760.0, height = 470.0;
  auto x_of = [&](double theta) { return left + theta * plot_w; };
  auto y_of = [&](double ttt) { return top + (1.0 - ttt / 100.0) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_sig6(width) +
         "\" height=\"" + format_sig6(height) + "\" viewBox=\"0 0 " + format_sig6(width) + " " +
         format_sig6(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";

  // Axes with quarter ticks.
  svg += "<line x1=\"" + format_sig6(left) + "\" y1=\"" + format_sig6(top) + "\" x2=\"" +
         format_sig6(left) + "\" y2=\"" + format_sig6(top + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_sig6(left) + "\" y1=\"" + format_sig6(top + plot_h) + "\" x2=\"" +
         format_sig6(left + plot_w) + "\" y2=\"" + format_sig6(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double f = tick / 4.0;
    svg += "<line x1=\"" + format_sig6(x_of(f)) + "\" y1=\"" + format_sig6(top + plot_h) +
           "\" x2=\"" + format_sig6(x_of(f)) + "\" y2=\"" + format_sig6(top + plot_h + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_sig6(x_of(f)) + "\" y=\"" + format_sig6(top + plot_h + 20) +
           "\" text-anchor=\"middle\">" + format_sig6(f) + "</text>\n";
    svg += "<line x1=\"" + format_sig6(left - 5) + "\" y1=\"" + format_sig6(y_of(100.0 * f)) +
           "\" x2=\"" + format_sig6(left) + "\" y2=\"" + format_sig6(y_of(100.0 * f)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + format_sig6(left - 10) + "\" y=\"" + format_sig6(y_of(100.0 * f) + 4) +
           "\" text-anchor=\"end\">" + format_sig6(100.0 * f) + "</text>\n";
  }
  svg += "<text x=\"" + format_sig6(left + plot_w / 2) + "\" y=\"" +
         format_sig6(top + plot_h + 40) + "\" text-anchor=\"middle\">threshold</text>\n";
  svg += "<text x=\"18\" y=\"" + format_sig6(top + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + format_sig6(top + plot_h / 2) +
         ")\">time to threshold (progress %)</text>\n";

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const char* color = kPalette[g % (sizeof kPalette / sizeof kPalette[0])];
    std::string points;
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double ttt = std::clamp(groups[g].ttt_curve[t].iqm, 0.0, 100.0);
      points += format_sig6(x_of(grid[t])) + "," + format_sig6(y_of(ttt)) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double legend_y = top + 10 + 20.0 * static_cast<double>(g);
    svg += "<line x1=\"" + format_sig6(left + plot_w + 20) + "\" y1=\"" + format_sig6(legend_y) +
           "\" x2=\"" + format_sig6(left + plot_w + 44) + "\" y2=\"" + format_sig6(legend_y) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + format_sig6(left + plot_w + 50) + "\" y=\"" + format_sig6(legend_y + 4) +
           "\">" + groups[g].name + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string guard_text(const Guard& guard, const SymbolVocabulary& vocab) {
  std::string text;
  for (int index : guard.positives) {
    if (!text.empty()) text += " and ";
    text += vocab.name(index);
  }
  for (int index : guard.negatives) {
    if (!text.empty()) text += " and ";
    text += "not " + vocab.name(index);
  }
  if (text.empty()) text = "always";
  return text;
}

}  // namespace

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.run_dirs.empty()) {
      throw std::invalid_argument("no run directories given");
    }

    std::vector<SeedRun> runs;
    for (const fs::path& dir : collect_seed_dirs(options.run_dirs, err)) {
      runs.push_back(load_seed_run(dir));
    }

    // Compatibility: one threshold grid overall, one map size per family.
    for (const SeedRun& run : runs) {
      if (run.threshold_grid != runs.front().threshold_grid) {
        throw std::invalid_argument(
            "incompatible runs: mixed threshold grids (" +
            std::to_string(runs.front().threshold_grid) + " vs " +
            std::to_string(run.threshold_grid) + ")");
      }
    }
    std::map<std::string, std::pair<int, int>> family_grid;
    for (const SeedRun& run : runs) {
      const auto size = std::make_pair(run.grid_width, run.grid_height);
      auto [it, inserted] = family_grid.emplace(run.cmdp_label, size);
      if (!inserted && it->second != size) {
        throw std::invalid_argument("incompatible runs: mixed map sizes for " + run.cmdp_label);
      }
    }

    std::map<std::string, ConfigGroup> group_map;
    for (SeedRun& run : runs) {
      ConfigGroup& group = group_map[run.config_name];
      if (group.runs.empty()) {
        group.name = run.config_name;
        group.cmdp_label = run.cmdp_label;
        group.representation = run.representation;
        group.threshold_grid = run.threshold_grid;
      } else if (group.runs.front().config != run.config) {
        throw std::invalid_argument("run directories disagree on configuration '" +
                                    run.config_name + "'");
      }
      for (const SeedRun& existing : group.runs) {
        if (existing.seed == run.seed) {
          throw std::invalid_argument("duplicate seed " + std::to_string(run.seed) +
                                      " for configuration '" + run.config_name + "'");
        }
      }
      group.runs.push_back(std::move(run));
    }

    const std::vector<double> grid = threshold_grid(runs.front().threshold_grid);
    std::vector<ConfigGroup> groups;
    for (auto& [name, group] : group_map) {
      std::sort(group.runs.begin(), group.runs.end(),
                [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });

      std::vector<double> auc_values, js_values, tr_values;
      for (const SeedRun& run : group.runs) {
        auc_values.push_back(ttt_auc(run.transferred, grid));
        js_values.push_back(jumpstart(run.transferred));
        const TransferRatio ratio = transfer_ratio(run.transferred, run.target);
        tr_values.push_back(ratio.infinite ? std::numeric_limits<double>::infinity()
                                           : ratio.value);
      }
      group.ttt_auc = aggregate_values(auc_values, name + "|ttt_auc");
      group.js = aggregate_values(js_values, name + "|js");
      group.tr = aggregate_values(tr_values, name + "|tr");

      RandomStream curve_rng(mix_seed(stable_hash(name + "|ttt_curve"), 0));
      for (double theta : grid) {
        std::vector<double> ttt_values;
        for (const SeedRun& run : group.runs) {
          ttt_values.push_back(time_to_threshold(run.transferred, theta));
        }
        Aggregate point;
        point.values = ttt_values;
        point.iqm = interquartile_mean(ttt_values);
        point.std_dev = sample_std(ttt_values);
        point.ci = stratified_bootstrap_ci({ttt_values}, curve_rng);
        group.ttt_curve.push_back(std::move(point));
      }
      groups.push_back(std::move(group));
    }

    fs::create_directories(options.out_dir);

    // Aligned table: one row block per task family, one column per
    // configuration; configurations from other families show "-".
    std::set<std::string> family_set;
    for (const ConfigGroup& group : groups) family_set.insert(group.cmdp_label);

    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header = {"utility", "family"};
    for (const ConfigGroup& group : groups) header.push_back(group.name);
    table.push_back(header);
    const char* utility_names[] = {"TTT_AUC", "JS", "TR"};
    for (const std::string& family : family_set) {
      for (const char* utility : utility_names) {
        std::vector<std::string> row = {utility, family};
        for (const ConfigGroup& group : groups) {
          if (group.cmdp_label != family) {
            row.push_back("-");
            continue;
          }
          const Aggregate& aggregate = std::string(utility) == "TTT_AUC" ? group.ttt_auc
                                       : std::string(utility) == "JS"    ? group.js
                                                                         : group.tr;
          row.push_back(cell_text(aggregate));
        }
        table.push_back(std::move(row));
      }
    }
    const std::string table_text = render_table(table);
    out << table_text;
    write_file(options.out_dir / "report_table.txt", table_text);

    std::string csv = "utility,family,configuration,iqm,std,ci_low,ci_high,seed_count\n";
    for (const ConfigGroup& group : groups) {
      const std::pair<const char*, const Aggregate*> stats[] = {
          {"TTT_AUC", &group.ttt_auc}, {"JS", &group.js}, {"TR", &group.tr}};
      for (const auto& [utility, aggregate] : stats) {
        csv += std::string(utility) + "," + group.cmdp_label + "," + group.name + "," +
               format_double(aggregate->iqm) + "," + format_double(aggregate->std_dev) + "," +
               format_double(aggregate->ci.low) + "," + format_double(aggregate->ci.high) + "," +
               std::to_string(group.runs.size()) + "\n";
      }
    }
    write_file(options.out_dir / "report_table.csv", csv);

    ConfigJson utilities;
    for (const ConfigGroup& group : groups) {
      ConfigJson entry;
      entry["family"] = group.cmdp_label;
      entry["representation"] = group.representation;
      ConfigJson seeds = ConfigJson::array();
      for (const SeedRun& run : group.runs) seeds.push_back(run.seed);
      entry["seeds"] = seeds;
      entry["ttt_auc"] = aggregate_json(group.ttt_auc);
      entry["js"] = aggregate_json(group.js);
      entry["tr"] = aggregate_json(group.tr);
      utilities[group.name] = entry;
    }
    write_file(options.out_dir / "utilities.json", utilities.dump(2) + "\n");

    for (const ConfigGroup& group : groups) {
      std::string curve = "theta,ttt_iqm,ci_low,ci_high\n";
      for (std::size_t t = 0; t < grid.size(); ++t) {
        curve += format_double(grid[t]) + "," + format_double(group.ttt_curve[t].iqm) + "," +
                 format_double(group.ttt_curve[t].ci.low) + "," +
                 format_double(group.ttt_curve[t].ci.high) + "\n";
      }
      write_file(options.out_dir / ("ttt_curve_" + group.name + ".csv"), curve);
    }

    if (options.svg) {
      write_file(options.out_dir / "ttt_curves.svg", svg_plot(groups, grid));
    }
    return 0;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }
}

int cmd_rm_validate(const std::filesystem::path& file, std::ostream& out, std::ostream& err) {
  RewardMachine rm;
  try {
    rm = load_rm(file);
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }
  out << "states: " << rm.state_count() << ", transitions: " << rm.transition_count()
      << ", symbols: " << rm.vocabulary.size() << '\n';
  const std::vector<RmDiagnostic> findings = validate_rm(rm);
  if (findings.empty()) {
    out << "ok\n";
  } else {
    for (const RmDiagnostic& finding : findings) {
      out << issue_name(finding.issue) << ": " << finding.message << '\n';
    }
  }
  return 0;
}

int cmd_rm_viz(const std::filesystem::path& file, std::ostream& out, std::ostream& err) {
  try {
    out << to_dot(load_rm(file));
    return 0;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }
}

int cmd_rm_plan(const std::filesystem::path& file, double gamma, std::ostream& out,
                std::ostream& err) {
  RewardMachine rm;
  try {
    rm = load_rm(file);
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }
  try {
    const RmValueTable table = value_iteration(rm, gamma);
    out << "gamma = " << format_sig6(gamma) << ", iterations = " << table.iterations_run
        << ", residual = " << format_sig6(table.residual) << '\n';
    for (int state = 0; state < rm.state_count(); ++state) {
      out << "V*(" << rm.state_names[static_cast<std::size_t>(state)]
          << ") = " << format_sig6(table.values[static_cast<std::size_t>(state)]) << '\n';
      if (rm.is_terminal(state)) {
        out << "  terminal\n";
        continue;
      }
      for (int index : greedy_transitions(rm, table, state)) {
        const RmTransition& transition =
            rm.outgoing[static_cast<std::size_t>(state)][static_cast<std::size_t>(index)];
        out << "  (" << guard_text(transition.guard, rm.vocabulary) << ") --> "
            << rm.state_names[static_cast<std::size_t>(transition.to)]
            << "; r=" << format_sig6(transition.reward) << '\n';
      }
    }
    return 0;
  } catch (const std::invalid_argument& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 1;
  }
}

}  // namespace cprep
