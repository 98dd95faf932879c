#include "cprep/training.hpp"

#include <cmath>
#include <stdexcept>

namespace cprep {

namespace {

// Stream tags deriving the independent generators of one training phase.
constexpr std::uint64_t kStreamNetInit = 1;
constexpr std::uint64_t kStreamActions = 2;
constexpr std::uint64_t kStreamReplay = 3;
constexpr std::uint64_t kStreamContextPick = 4;
constexpr std::uint64_t kStreamTaskSeeds = 5;
constexpr std::uint64_t kStreamDesiredLabel = 6;

}  // namespace

BundleCache::BundleCache(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder,
                         double gamma)
    : family_(family), config_(config), encoder_(encoder), gamma_(gamma) {}

const ContextBundle& BundleCache::get(const Context& context) {
  const std::string key = context_key(context);
  auto it = cache_.find(key);
  if (it != cache_.end()) return *it->second;

  auto bundle = std::make_unique<ContextBundle>();
  bundle->context = context;
  bundle->gen = generate(family_, context);
  bundle->table = value_iteration(bundle->gen.rm, gamma_);
  bundle->policy = make_greedy_policy(bundle->gen.rm, bundle->table);
  bundle->context_features = context_block(family_, config_, encoder_, context);
  auto [pos, inserted] = cache_.emplace(key, std::move(bundle));
  (void)inserted;
  return *pos->second;
}

std::vector<EvalPoint> evaluation_points(long total_steps) {
  if (total_steps < 1) throw std::invalid_argument("evaluation_points: empty budget");
  std::vector<EvalPoint> points;
  points.reserve(101);
  for (int i = 0; i <= 100; ++i) {
    EvalPoint point;
    point.progress_percent = i;
    point.env_steps = std::llround(static_cast<double>(i) *
                                   static_cast<double>(total_steps) / 100.0);
    points.push_back(point);
  }
  return points;
}

TrainResult run_training(const Cmdp& family, const ReprConfig& config, const DqnConfig& dqn,
                         const std::vector<Context>& contexts, const PcgEncoder* encoder,
                         BundleCache& bundles, const TrainOptions& options,
                         const EvalCallback& evaluate, const EvalCallback* aux_evaluate) {
  if (contexts.empty()) throw std::invalid_argument("run_training: no training contexts");
  if (options.total_steps < 1) throw std::invalid_argument("run_training: empty step budget");

  const int obs_width = observation_size(family, config, encoder);
  const Cmdp& fam = family;

  RandomStream init_rng(mix_seed(options.seed, kStreamNetInit));
  RandomStream action_rng(mix_seed(options.seed, kStreamActions));
  RandomStream replay_rng(mix_seed(options.seed, kStreamReplay));
  RandomStream context_rng(mix_seed(options.seed, kStreamContextPick));
  RandomStream dtl_rng(mix_seed(options.seed, kStreamDesiredLabel));
  const std::uint64_t task_seed_base = mix_seed(options.seed, kStreamTaskSeeds);

  // One task instance per training context; each owns its reset stream.
  std::vector<std::unique_ptr<TaskMdp>> tasks(contexts.size());
  auto task_for = [&](std::size_t i) -> TaskMdp& {
    if (!tasks[i]) {
      tasks[i] = std::make_unique<TaskMdp>(fam, contexts[i],
                                           mix_seed(task_seed_base, static_cast<std::uint64_t>(i)));
    }
    return *tasks[i];
  };

  const int actions = fam.env == EnvKind::PickupDropoff ? 6 : 5;
  TrainResult result;
  if (options.initial != nullptr) {
    if (options.initial->input_size() != obs_width || options.initial->action_count() != actions) {
      throw std::invalid_argument("run_training: warm-start network does not fit this session");
    }
    result.net = *options.initial;
  } else {
    result.net = make_qnetwork(obs_width, dqn.hidden_width, actions, init_rng);
  }
  QNetwork target_net = result.net;
  AdamState adam = make_adam(result.net, AdamOptions{dqn.learning_rate, 0.9, 0.999, 1e-8});
  ReplayBuffer buffer(dqn.buffer_capacity, obs_width);
  const ExplorationSchedule schedule = make_schedule(dqn, options.total_steps);
  const std::vector<EvalPoint> points = evaluation_points(options.total_steps);

  auto record_points = [&](long step) {
    const double value = evaluate(result.net);
    const double aux_value = aux_evaluate != nullptr ? (*aux_evaluate)(result.net) : 0.0;
    for (const EvalPoint& point : points) {
      if (point.env_steps != step) continue;
      result.history.points.push_back({point.progress_percent, step, value});
      if (aux_evaluate != nullptr) {
        result.aux_history.points.push_back({point.progress_percent, step, aux_value});
      }
    }
  };

  // Pre-training evaluation.
  record_points(0);
  std::size_t next_point = result.history.points.size();

  // Episode-local state.
  const ContextBundle* bundle = nullptr;
  TaskMdp* task = nullptr;
  EnvState state;
  RmRunState run;
  Label dtl;
  std::vector<double> obs;
  std::vector<double> next_obs;
  bool need_reset = true;

  auto recompute_dtl = [&]() {
    if (!config.use_dtl) return;
    dtl = desired_label(bundle->gen.rm, bundle->policy, run.current, config.dtl_mode,
                        config.dtl_mode == DesiredLabelMode::UniformSample ? &dtl_rng : nullptr);
  };

  for (long step = 1; step <= options.total_steps; ++step) {
    if (need_reset) {
      const std::size_t pick = static_cast<std::size_t>(context_rng.uniform_index(contexts.size()));
      bundle = &bundles.get(contexts[pick]);
      task = &task_for(pick);
      state = task->reset();
      run = make_run_state(bundle->gen.rm, bundle->gen.initial_state(state));
      recompute_dtl();
      build_observation(fam, config, *task, state, bundle->context_features, run,
                        config.use_dtl ? &dtl : nullptr, obs);
      need_reset = false;
    }

    const double epsilon = schedule.epsilon(step - 1);
    const Eigen::Map<const Eigen::VectorXd> obs_view(obs.data(),
                                                     static_cast<Eigen::Index>(obs.size()));
    const int action = select_action(result.net, obs_view, epsilon, actions, action_rng);

    const StepResult sr = env_step(*task, state, action);
    const Label label = bundle->gen.labeler(state, action, sr.next);
    const int u_before = run.current;
    const double reward = training_reward(config, sr.reward, &bundle->gen.rm, &bundle->table,
                                          u_before, label);
    advance(bundle->gen.rm, run, label);
    if (run.current != u_before) recompute_dtl();

    build_observation(fam, config, *task, sr.next, bundle->context_features, run,
                      config.use_dtl ? &dtl : nullptr, next_obs);
    buffer.push(obs, action, reward, next_obs, sr.done);

    state = sr.next;
    obs.swap(next_obs);
    if (sr.done || sr.truncated) {
      need_reset = true;
      ++result.episodes;
    }

    if (step >= dqn.learning_starts && step % dqn.train_frequency == 0 &&
        buffer.size() >= static_cast<std::size_t>(dqn.batch_size)) {
      for (int g = 0; g < dqn.gradient_steps; ++g) {
        result.final_loss = train_step(result.net, target_net, adam, buffer, dqn, replay_rng);
      }
    }
    if (step % dqn.target_update_interval == 0) {
      target_net = result.net;
    }

    if (next_point < points.size() && step == points[next_point].env_steps) {
      record_points(step);
      while (next_point < points.size() && points[next_point].env_steps == step) {
        ++next_point;
      }
    }
  }

  if (result.history.size() != 101) {
    throw std::logic_error("run_training: evaluation schedule produced " +
                           std::to_string(result.history.size()) + " points instead of 101");
  }
  return result;
}

}  // namespace cprep
