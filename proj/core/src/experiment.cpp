#include "cprep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include "cprep/metrics.hpp"
#include "cprep/numeric_text.hpp"
#include "cprep/qnet.hpp"
#include "cprep/version.hpp"

namespace cprep {
namespace {

[[noreturn]] void bad_field(const char* key, const char* expected) {
  throw std::invalid_argument(std::string("config field '") + key + "' must be " + expected);
}

/// Looks a key up while recording it as recognized, so leftovers can be
/// reported as unknown fields afterwards.
const ConfigJson* find_field(const ConfigJson& json, const char* key,
                             std::vector<std::string>& seen) {
  seen.emplace_back(key);
  auto it = json.find(key);
  return it == json.end() ? nullptr : &it.value();
}

void read_string(const ConfigJson& json, const char* key, std::vector<std::string>& seen,
                 std::string& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_string()) bad_field(key, "a string");
    out = value->get<std::string>();
  }
}

void read_int(const ConfigJson& json, const char* key, std::vector<std::string>& seen, int& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_number_integer()) bad_field(key, "an integer");
    const long long raw = value->get<long long>();
    if (raw < std::numeric_limits<int>::min() || raw > std::numeric_limits<int>::max()) {
      bad_field(key, "an integer within 32-bit range");
    }
    out = static_cast<int>(raw);
  }
}

void read_long(const ConfigJson& json, const char* key, std::vector<std::string>& seen,
               long& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_number_integer()) bad_field(key, "an integer");
    out = static_cast<long>(value->get<long long>());
  }
}

void read_size(const ConfigJson& json, const char* key, std::vector<std::string>& seen,
               std::size_t& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_number_integer() || value->get<long long>() < 0) {
      bad_field(key, "a non-negative integer");
    }
    out = static_cast<std::size_t>(value->get<long long>());
  }
}

void read_double(const ConfigJson& json, const char* key, std::vector<std::string>& seen,
                 double& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_number()) bad_field(key, "a number");
    out = value->get<double>();
  }
}

void read_seeds(const ConfigJson& json, const char* key, std::vector<std::string>& seen,
                std::vector<std::uint64_t>& out) {
  if (const ConfigJson* value = find_field(json, key, seen)) {
    if (!value->is_array()) bad_field(key, "an array of non-negative integers");
    std::vector<std::uint64_t> seeds;
    for (const auto& element : *value) {
      if (!element.is_number_integer() || element.get<long long>() < 0) {
        bad_field(key, "an array of non-negative integers");
      }
      seeds.push_back(element.get<std::uint64_t>());
    }
    out = std::move(seeds);
  }
}

std::string require_string(const ConfigJson& json, const char* key,
                           std::vector<std::string>& seen) {
  std::string out;
  read_string(json, key, seen, out);
  if (out.empty()) {
    throw std::invalid_argument(std::string("config field '") + key + "' is required");
  }
  return out;
}

DesiredLabelMode parse_dtl_mode(const std::string& text) {
  if (text == "first") return DesiredLabelMode::DeterministicFirst;
  if (text == "sample") return DesiredLabelMode::UniformSample;
  throw std::invalid_argument("config field 'dtl_mode' must be \"first\" or \"sample\"");
}

const char* dtl_mode_name(DesiredLabelMode mode) {
  return mode == DesiredLabelMode::UniformSample ? "sample" : "first";
}

/// Default source/target context-set sizes per task family.
void default_context_counts(EnvKind env, ContextSpace space, int& source, int& target) {
  switch (space) {
    case ContextSpace::EntityLocation:
      if (env == EnvKind::GridNav) {
        source = 8;
        target = 16;
      } else {
        source = 100;
        target = 200;
      }
      break;
    case ContextSpace::ChangingMap:
      source = 250;
      target = 500;
      break;
    case ContextSpace::PoiOrder:
      source = 24;
      target = 48;
      break;
  }
}

CmdpOptions cmdp_options_of(const ExperimentConfig& config) {
  CmdpOptions options;
  options.width = config.grid_width;
  options.height = config.grid_height;
  options.entity_count = config.entity_count;
  options.episode_cap = config.episode_cap;
  options.cm_wall_min = config.cm_wall_min;
  options.cm_wall_max = config.cm_wall_max;
  options.sector_rows = config.sector_rows;
  options.sector_cols = config.sector_cols;
  return options;
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

std::string iso_utc(std::chrono::system_clock::time_point when) {
  const std::time_t stamp = std::chrono::system_clock::to_time_t(when);
  std::tm split{};
  gmtime_r(&stamp, &split);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &split);
  return buffer;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  stream << text;
  if (!stream) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

struct SeedTimer {
  std::chrono::system_clock::time_point wall_start = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point tick_start = std::chrono::steady_clock::now();

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - tick_start).count();
  }
};

void write_seed_artifacts(const std::filesystem::path& seed_dir, const ConfigJson& snapshot,
                          const ExperimentConfig& config, std::uint64_t seed,
                          const SessionResult& result, const SeedTimer& timer) {
  write_history_csv(seed_dir / "history_source.csv", result.source_history);
  write_history_csv(seed_dir / "history_generalization.csv", result.generalization_history);
  write_history_csv(seed_dir / "history_transferred.csv", result.transferred_history);
  write_history_csv(seed_dir / "history_target.csv", result.target_history);

  save_checkpoint(seed_dir / "checkpoint_source", result.source_net, seed,
                  static_cast<std::uint64_t>(config.source_steps));
  save_checkpoint(seed_dir / "checkpoint_transferred", result.transferred_net, seed,
                  static_cast<std::uint64_t>(config.target_steps));
  save_checkpoint(seed_dir / "checkpoint_target", result.target_net, seed,
                  static_cast<std::uint64_t>(config.target_steps));

  std::string context_lines;
  ConfigJson source_keys = ConfigJson::array();
  ConfigJson target_keys = ConfigJson::array();
  for (const Context& context : result.contexts.source) {
    const std::string key = context_key(context);
    context_lines += "source " + key + "\n";
    source_keys.push_back(key);
  }
  for (const Context& context : result.contexts.target) {
    const std::string key = context_key(context);
    context_lines += "target " + key + "\n";
    target_keys.push_back(key);
  }
  write_text_file(seed_dir / "contexts.txt", context_lines);

  ConfigJson manifest;
  manifest["code_version"] = kVersion;
  manifest["config"] = snapshot;
  manifest["seed"] = seed;
  manifest["contexts"] = ConfigJson{{"source", source_keys}, {"target", target_keys}};
  manifest["artifacts"] = ConfigJson{{"history_source", "history_source.csv"},
                                     {"history_generalization", "history_generalization.csv"},
                                     {"history_transferred", "history_transferred.csv"},
                                     {"history_target", "history_target.csv"},
                                     {"checkpoint_source", "checkpoint_source"},
                                     {"checkpoint_transferred", "checkpoint_transferred"},
                                     {"checkpoint_target", "checkpoint_target"},
                                     {"contexts", "contexts.txt"}};
  manifest["observation_width"] = result.observation_width;
  manifest["episodes"] = ConfigJson{{"source", result.source_episodes},
                                    {"transferred", result.transferred_episodes},
                                    {"target", result.target_episodes}};
  manifest["wall_clock"] =
      ConfigJson{{"started_at", iso_utc(timer.wall_start)},
                 {"finished_at", iso_utc(std::chrono::system_clock::now())},
                 {"duration_seconds", timer.seconds()}};
  write_text_file(seed_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const ConfigJson& json) {
  if (!json.is_object()) {
    throw std::invalid_argument("config root must be a JSON object");
  }
  ExperimentConfig config;
  std::vector<std::string> seen;

  config.env = parse_env_code(require_string(json, "env", seen));
  config.space = parse_space_code(require_string(json, "context_space", seen));
  config.representation = require_string(json, "representation", seen);

  read_string(json, "name", seen, config.name);
  read_seeds(json, "seeds", seen, config.seeds);
  read_int(json, "source_contexts", seen, config.source_contexts);
  read_int(json, "target_contexts", seen, config.target_contexts);
  read_long(json, "source_steps", seen, config.source_steps);
  read_long(json, "target_steps", seen, config.target_steps);
  read_int(json, "eval_episodes", seen, config.eval_episodes);
  read_int(json, "episode_cap", seen, config.episode_cap);
  read_int(json, "grid_width", seen, config.grid_width);
  read_int(json, "grid_height", seen, config.grid_height);
  read_int(json, "entity_count", seen, config.entity_count);
  read_int(json, "cm_wall_min", seen, config.cm_wall_min);
  read_int(json, "cm_wall_max", seen, config.cm_wall_max);
  read_int(json, "sector_rows", seen, config.sector_rows);
  read_int(json, "sector_cols", seen, config.sector_cols);
  read_double(json, "gamma", seen, config.dqn.gamma);
  read_double(json, "learning_rate", seen, config.dqn.learning_rate);
  read_int(json, "batch_size", seen, config.dqn.batch_size);
  read_size(json, "buffer_capacity", seen, config.dqn.buffer_capacity);
  read_long(json, "learning_starts", seen, config.dqn.learning_starts);
  read_int(json, "train_frequency", seen, config.dqn.train_frequency);
  read_int(json, "gradient_steps", seen, config.dqn.gradient_steps);
  read_long(json, "target_update_interval", seen, config.dqn.target_update_interval);
  read_double(json, "exploration_start", seen, config.dqn.exploration_start);
  read_double(json, "exploration_end", seen, config.dqn.exploration_end);
  read_double(json, "exploration_fraction", seen, config.dqn.exploration_fraction);
  read_int(json, "hidden_width", seen, config.dqn.hidden_width);
  std::string dtl_mode_text;
  read_string(json, "dtl_mode", seen, dtl_mode_text);
  if (!dtl_mode_text.empty()) config.dtl_mode = parse_dtl_mode(dtl_mode_text);
  read_int(json, "threshold_grid", seen, config.threshold_grid);
  read_string(json, "out", seen, config.out);

  for (const auto& item : json.items()) {
    if (std::find(seen.begin(), seen.end(), item.key()) == seen.end()) {
      throw std::invalid_argument("unknown config field '" + item.key() + "'");
    }
  }

  config.representation = repr_name(parse_repr_name(config.representation));
  if (config.source_contexts < 0 || config.target_contexts < 0) {
    int default_source = 0;
    int default_target = 0;
    default_context_counts(config.env, config.space, default_source, default_target);
    if (config.source_contexts < 0) config.source_contexts = default_source;
    if (config.target_contexts < 0) config.target_contexts = default_target;
  }
  if (config.entity_count < 0) {
    // make_cmdp owns the per-environment entity default; read the resolved
    // value back so the canonical JSON is explicit.
    config.entity_count = make_cmdp(config.env, config.space, cmdp_options_of(config)).entity_count;
  }
  if (config.name.empty()) {
    config.name = std::string(env_code(config.env)) + "_" + space_code(config.space) + "_" +
                  config.representation;
  }
  validate_experiment_config(config);
  return config;
}

ConfigJson experiment_config_json(const ExperimentConfig& config) {
  ConfigJson json;
  json["name"] = config.name;
  json["env"] = env_code(config.env);
  json["context_space"] = space_code(config.space);
  json["representation"] = config.representation;
  json["seeds"] = config.seeds;
  json["source_contexts"] = config.source_contexts;
  json["target_contexts"] = config.target_contexts;
  json["source_steps"] = config.source_steps;
  json["target_steps"] = config.target_steps;
  json["eval_episodes"] = config.eval_episodes;
  json["episode_cap"] = config.episode_cap;
  json["grid_width"] = config.grid_width;
  json["grid_height"] = config.grid_height;
  json["entity_count"] = config.entity_count;
  json["cm_wall_min"] = config.cm_wall_min;
  json["cm_wall_max"] = config.cm_wall_max;
  json["sector_rows"] = config.sector_rows;
  json["sector_cols"] = config.sector_cols;
  json["gamma"] = config.dqn.gamma;
  json["learning_rate"] = config.dqn.learning_rate;
  json["batch_size"] = config.dqn.batch_size;
  json["buffer_capacity"] = config.dqn.buffer_capacity;
  json["learning_starts"] = config.dqn.learning_starts;
  json["train_frequency"] = config.dqn.train_frequency;
  json["gradient_steps"] = config.dqn.gradient_steps;
  json["target_update_interval"] = config.dqn.target_update_interval;
  json["exploration_start"] = config.dqn.exploration_start;
  json["exploration_end"] = config.dqn.exploration_end;
  json["exploration_fraction"] = config.dqn.exploration_fraction;
  json["hidden_width"] = config.dqn.hidden_width;
  json["dtl_mode"] = dtl_mode_name(config.dtl_mode);
  json["threshold_grid"] = config.threshold_grid;
  json["out"] = config.out;
  return json;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::invalid_argument("cannot read config file: " + path.string());
  }
  ConfigJson json;
  try {
    json = ConfigJson::parse(stream);
  } catch (const nlohmann::json::parse_error& error) {
    throw std::invalid_argument("config JSON parse error in " + path.string() + ": " +
                                error.what());
  }
  return experiment_config_from_json(json);
}

void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  write_text_file(path, experiment_config_json(config).dump(2) + "\n");
}

void validate_experiment_config(const ExperimentConfig& config) {
  require(!config.name.empty(), "config name must not be empty");
  require(config.name.find('/') == std::string::npos && config.name != "." &&
              config.name != "..",
          "config name must be usable as a directory name");
  parse_repr_name(config.representation);
  make_cmdp(config.env, config.space, cmdp_options_of(config));  // validates family fields

  require(!config.seeds.empty(), "config needs at least one seed");
  std::set<std::uint64_t> unique_seeds(config.seeds.begin(), config.seeds.end());
  require(unique_seeds.size() == config.seeds.size(), "config seeds must be unique");

  require(config.source_contexts >= 1, "source_contexts must be at least 1");
  require(config.target_contexts >= 1, "target_contexts must be at least 1");
  require(config.source_steps >= 1, "source_steps must be at least 1");
  require(config.target_steps >= 1, "target_steps must be at least 1");
  require(config.eval_episodes >= 1, "eval_episodes must be at least 1");
  require(config.threshold_grid >= 2, "threshold_grid must be at least 2");
  require(!config.out.empty(), "out must not be empty");

  const DqnConfig& dqn = config.dqn;
  require(dqn.gamma >= 0.0 && dqn.gamma < 1.0, "gamma must lie in [0, 1)");
  require(dqn.learning_rate > 0.0, "learning_rate must be positive");
  require(dqn.batch_size >= 1, "batch_size must be at least 1");
  require(dqn.buffer_capacity >= static_cast<std::size_t>(dqn.batch_size),
          "buffer_capacity must be at least batch_size");
  require(dqn.learning_starts >= 0, "learning_starts must be non-negative");
  require(dqn.train_frequency >= 1, "train_frequency must be at least 1");
  require(dqn.gradient_steps >= 1, "gradient_steps must be at least 1");
  require(dqn.target_update_interval >= 1, "target_update_interval must be at least 1");
  require(dqn.exploration_start >= 0.0 && dqn.exploration_start <= 1.0,
          "exploration_start must lie in [0, 1]");
  require(dqn.exploration_end >= 0.0 && dqn.exploration_end <= 1.0,
          "exploration_end must lie in [0, 1]");
  require(dqn.exploration_start >= dqn.exploration_end,
          "exploration_start must be at least exploration_end");
  require(dqn.exploration_fraction > 0.0 && dqn.exploration_fraction <= 1.0,
          "exploration_fraction must lie in (0, 1]");
  require(dqn.hidden_width >= 1, "hidden_width must be at least 1");
}

SessionConfig make_session_config(const ExperimentConfig& config, std::uint64_t seed) {
  SessionConfig session;
  session.family = make_cmdp(config.env, config.space, cmdp_options_of(config));
  session.repr = parse_repr_name(config.representation);
  session.repr.dtl_mode = config.dtl_mode;
  session.dqn = config.dqn;
  session.source_context_count = config.source_contexts;
  session.target_context_count = config.target_contexts;
  session.source_steps = config.source_steps;
  session.target_steps = config.target_steps;
  session.eval_episodes = config.eval_episodes;
  session.seed = seed;
  return session;
}

int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_experiment_config(options.config_path);
    if (!options.seeds.empty()) config.seeds = options.seeds;
    if (!options.out.empty()) {
      config.out = options.out;
    } else if (const char* out_root = std::getenv(kOutRootEnvVar); out_root != nullptr &&
               *out_root != '\0') {
      config.out = out_root;
    }
    validate_experiment_config(config);
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }

  const std::filesystem::path config_dir = std::filesystem::path(config.out) / config.name;
  try {
    std::filesystem::create_directories(config_dir);
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 1;
  }

  const ConfigJson snapshot = experiment_config_json(config);
  const std::size_t seed_count = config.seeds.size();
  std::vector<std::string> failures(seed_count);
  std::vector<char> failed(seed_count, 0);
  std::atomic<std::size_t> cursor{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    for (std::size_t i = cursor.fetch_add(1); i < seed_count; i = cursor.fetch_add(1)) {
      const std::uint64_t seed = config.seeds[i];
      const std::filesystem::path seed_dir = config_dir / std::to_string(seed);
      {
        std::lock_guard<std::mutex> hold(log_mutex);
        log << config.name << " seed " << seed << ": started" << std::endl;
      }
      SeedTimer timer;
      try {
        std::filesystem::create_directories(seed_dir);
        std::filesystem::remove(seed_dir / kFailureMarker);
        const SessionResult result = run_session(make_session_config(config, seed));
        write_seed_artifacts(seed_dir, snapshot, config, seed, result, timer);
        std::lock_guard<std::mutex> hold(log_mutex);
        log << config.name << " seed " << seed << ": finished in " << format_sig6(timer.seconds())
            << " s (observation width " << result.observation_width << ")" << std::endl;
      } catch (const std::exception& error) {
        failed[i] = 1;
        failures[i] = error.what();
        try {
          write_text_file(seed_dir / kFailureMarker, std::string(error.what()) + "\n");
        } catch (...) {
          // The marker is best effort; the original error is reported below.
        }
        std::lock_guard<std::mutex> hold(log_mutex);
        log << config.name << " seed " << seed << ": FAILED: " << error.what() << std::endl;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.parallel, static_cast<int>(seed_count)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& thread : pool) thread.join();
  }

  bool any_failed = false;
  for (std::size_t i = 0; i < seed_count; ++i) {
    if (failed[i]) {
      any_failed = true;
      err << "error: seed " << config.seeds[i] << " failed: " << failures[i] << '\n';
    }
  }
  return any_failed ? 1 : 0;
}

}  // namespace cprep
