#include "cprep/session.hpp"

#include <stdexcept>

namespace cprep {

namespace {

// Stream tags for the independent generators of a session.
constexpr std::uint64_t kStreamContexts = 101;
constexpr std::uint64_t kStreamSourceTrain = 102;
constexpr std::uint64_t kStreamTransferTrain = 103;
constexpr std::uint64_t kStreamTargetTrain = 104;
constexpr std::uint64_t kStreamSourceEval = 105;
constexpr std::uint64_t kStreamTransferEval = 106;
constexpr std::uint64_t kStreamTargetEval = 107;
constexpr std::uint64_t kStreamGeneralizationEval = 108;

}  // namespace

double evaluate_policy(const QNetwork& net, const Cmdp& family, const ReprConfig& config,
                       BundleCache& bundles, const std::vector<Context>& contexts, int episodes,
                       double gamma, RandomStream& rng) {
  if (contexts.empty()) throw std::invalid_argument("evaluate_policy: no contexts");
  if (episodes < 1) throw std::invalid_argument("evaluate_policy: no episodes");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("evaluate_policy: gamma outside [0, 1]");
  }

  // Fresh task instances so evaluation never disturbs training resets.
  std::vector<TaskMdp> tasks;
  tasks.reserve(contexts.size());
  for (const Context& context : contexts) {
    tasks.emplace_back(family, context, rng.next_u64());
  }

  std::vector<double> obs;
  double total_return = 0.0;
  for (int episode = 0; episode < episodes; ++episode) {
    const std::size_t pick = static_cast<std::size_t>(rng.uniform_index(contexts.size()));
    const ContextBundle& bundle = bundles.get(contexts[pick]);
    TaskMdp& task = tasks[pick];

    EnvState state = task.reset();
    RmRunState run = make_run_state(bundle.gen.rm, bundle.gen.initial_state(state));
    Label dtl;
    if (config.use_dtl) {
      dtl = desired_label(bundle.gen.rm, bundle.policy, run.current,
                          DesiredLabelMode::DeterministicFirst, nullptr);
    }

    double episode_return = 0.0;
    double discount = 1.0;
    while (true) {
      build_observation(family, config, task, state, bundle.context_features, run,
                        config.use_dtl ? &dtl : nullptr, obs);
      const Eigen::Map<const Eigen::VectorXd> obs_view(obs.data(),
                                                       static_cast<Eigen::Index>(obs.size()));
      const int action = greedy_action(net, obs_view);
      const StepResult sr = env_step(task, state, action);
      episode_return += discount * sr.reward;
      discount *= gamma;
      const Label label = bundle.gen.labeler(state, action, sr.next);
      const int u_before = run.current;
      advance(bundle.gen.rm, run, label);
      if (config.use_dtl && run.current != u_before) {
        dtl = desired_label(bundle.gen.rm, bundle.policy, run.current,
                            DesiredLabelMode::DeterministicFirst, nullptr);
      }
      state = sr.next;
      if (sr.done || sr.truncated) break;
    }
    total_return += episode_return;
  }
  return total_return / static_cast<double>(episodes);
}

SessionResult run_session(const SessionConfig& config) {
  if (config.source_context_count < 1 || config.target_context_count < 1) {
    throw std::invalid_argument("run_session: context counts must be positive");
  }
  if (config.source_steps < 1 || config.target_steps < 1) {
    throw std::invalid_argument("run_session: step budgets must be positive");
  }

  SessionResult result;
  RandomStream context_rng(mix_seed(config.seed, kStreamContexts));
  result.contexts = sample_contexts(config.family, config.source_context_count,
                                    config.target_context_count, context_rng);

  // The one-hot encoder registers every context of the session so the
  // observation width survives the transfer.
  std::vector<Context> all_contexts = result.contexts.source;
  all_contexts.insert(all_contexts.end(), result.contexts.target.begin(),
                      result.contexts.target.end());
  PcgEncoder encoder(all_contexts);
  const PcgEncoder* encoder_ptr =
      config.repr.base == BaseRepresentation::Pcg ? &encoder : nullptr;

  BundleCache bundles(config.family, config.repr, encoder_ptr, config.dqn.gamma);
  result.observation_width = observation_size(config.family, config.repr, encoder_ptr);

  auto make_eval = [&](const std::vector<Context>& contexts, std::uint64_t stream_tag) {
    auto rng = std::make_shared<RandomStream>(mix_seed(config.seed, stream_tag));
    return [&, rng, contexts_copy = contexts](const QNetwork& net) {
      return evaluate_policy(net, config.family, config.repr, bundles, contexts_copy,
                             config.eval_episodes, config.dqn.gamma, *rng);
    };
  };

  {
    TrainOptions options;
    options.total_steps = config.source_steps;
    options.seed = mix_seed(config.seed, kStreamSourceTrain);
    const EvalCallback on_target =
        make_eval(result.contexts.target, kStreamGeneralizationEval);
    TrainResult source =
        run_training(config.family, config.repr, config.dqn, result.contexts.source, encoder_ptr,
                     bundles, options, make_eval(result.contexts.source, kStreamSourceEval),
                     &on_target);
    result.source_net = std::move(source.net);
    result.source_history = std::move(source.history);
    result.generalization_history = std::move(source.aux_history);
    result.source_episodes = source.episodes;
  }
  {
    TrainOptions options;
    options.total_steps = config.target_steps;
    options.seed = mix_seed(config.seed, kStreamTransferTrain);
    options.initial = &result.source_net;
    TrainResult transferred =
        run_training(config.family, config.repr, config.dqn, result.contexts.target, encoder_ptr,
                     bundles, options, make_eval(result.contexts.target, kStreamTransferEval));
    result.transferred_net = std::move(transferred.net);
    result.transferred_history = std::move(transferred.history);
    result.transferred_episodes = transferred.episodes;
  }
  {
    TrainOptions options;
    options.total_steps = config.target_steps;
    options.seed = mix_seed(config.seed, kStreamTargetTrain);
    TrainResult target =
        run_training(config.family, config.repr, config.dqn, result.contexts.target, encoder_ptr,
                     bundles, options, make_eval(result.contexts.target, kStreamTargetEval));
    result.target_net = std::move(target.net);
    result.target_history = std::move(target.history);
    result.target_episodes = target.episodes;
  }
  return result;
}

}  // namespace cprep
