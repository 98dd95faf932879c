#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cprep/session.hpp"

namespace cprep {

/// JSON document type used for configs and manifests.  Insertion order is
/// preserved so emitted files keep a stable, human-friendly key order.
using ConfigJson = nlohmann::ordered_json;

/// Complete description of one transfer study: task family, observation and
/// reward configuration, budgets, agent hyperparameters, seeds, and output
/// location.  Fields initialized to -1 (context counts, entity count) are
/// resolved to family-specific defaults when the config is loaded.
struct ExperimentConfig {
  std::string name;            ///< run-directory name; empty = "<env>_<space>_<representation>"
  EnvKind env = EnvKind::GridNav;
  ContextSpace space = ContextSpace::EntityLocation;
  std::string representation;  ///< e.g. "CTL", "PCG+LTL", "CTL+C-PREP"
  std::vector<std::uint64_t> seeds = {42, 84, 126, 168, 210};
  int source_contexts = -1;
  int target_contexts = -1;
  long source_steps = 4'000'000;
  long target_steps = 4'000'000;
  int eval_episodes = 50;
  int episode_cap = 200;
  int grid_width = 6;
  int grid_height = 6;
  int entity_count = -1;
  int cm_wall_min = 2;
  int cm_wall_max = 10;
  int sector_rows = 2;
  int sector_cols = 2;
  DqnConfig dqn;
  DesiredLabelMode dtl_mode = DesiredLabelMode::DeterministicFirst;
  int threshold_grid = 51;
  std::string out = "runs";
};

/// Builds a config from a parsed JSON object.  Only "env", "context_space"
/// and "representation" are required; every other field falls back to its
/// default.  Unknown fields, wrong types, and out-of-range values all throw
/// std::invalid_argument.  The returned config is fully resolved: context
/// counts, entity count, the representation spelling, and the name are
/// canonical.
ExperimentConfig experiment_config_from_json(const ConfigJson& json);

/// Canonical JSON form: every field explicit, fixed key order.  Loading the
/// result reproduces the config, and re-serializing is byte-identical.
ConfigJson experiment_config_json(const ExperimentConfig& config);

/// File front ends.  Loading throws std::invalid_argument on unreadable
/// files, malformed JSON, and invalid configs.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Throws std::invalid_argument when any field is out of range or the
/// env/context-space pairing is unsupported.  Called by the loaders.
void validate_experiment_config(const ExperimentConfig& config);

/// Per-seed session parameters for this study.
SessionConfig make_session_config(const ExperimentConfig& config, std::uint64_t seed);

/// When set, this environment variable replaces the config's output root
/// unless --out is given explicitly.
inline constexpr const char* kOutRootEnvVar = "CPREP_OUT_ROOT";

/// Name of the marker file written into a seed directory when that seed's
/// run fails; it contains the error message and coexists with whatever
/// artifacts were completed before the failure.
inline constexpr const char* kFailureMarker = "FAILED";

struct RunOptions {
  std::filesystem::path config_path;
  std::vector<std::uint64_t> seeds;  ///< empty = seeds from the config
  std::string out;                   ///< empty = environment variable, then config
  int parallel = 1;                  ///< worker threads across seeds
};

/// Executes the configured study once per seed and writes, under
/// <out>/<name>/<seed>/: manifest.json, history_source.csv,
/// history_generalization.csv, history_transferred.csv, history_target.csv,
/// checkpoint_source, checkpoint_transferred, checkpoint_target, and
/// contexts.txt.  Returns 0 when every seed completes, 2 when the config is
/// invalid, and 1 when any seed fails at runtime (its directory keeps the
/// partial artifacts plus a FAILED marker).
int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace cprep
