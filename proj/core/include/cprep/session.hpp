#pragma once

#include <cstdint>

#include "cprep/training.hpp"

namespace cprep {

/// One full transfer experiment for one seed: train on source contexts,
/// transfer to target contexts, and train a fresh baseline on the targets.
struct SessionConfig {
  Cmdp family;
  ReprConfig repr;
  DqnConfig dqn;
  int source_context_count = 0;
  int target_context_count = 0;
  long source_steps = 0;
  long target_steps = 0;
  int eval_episodes = 50;
  std::uint64_t seed = 0;
};

struct SessionResult {
  ContextSets contexts;
  TrainingHistory source_history;       ///< source agent on the source contexts
  TrainingHistory generalization_history;  ///< source agent scored on the target contexts
  TrainingHistory transferred_history;  ///< warm-started agent on the target contexts
  TrainingHistory target_history;       ///< from-scratch agent on the target contexts
  QNetwork source_net;
  QNetwork transferred_net;
  QNetwork target_net;
  long source_episodes = 0;
  long transferred_episodes = 0;
  long target_episodes = 0;
  int observation_width = 0;
};

/// Mean discounted return (task reward, task discount) of the greedy policy
/// over `episodes` episodes, each on a context drawn uniformly from the
/// given set.  Episode start states come from fresh task instances seeded
/// off `rng`, so successive calls see different draws but reruns reproduce
/// them.
double evaluate_policy(const QNetwork& net, const Cmdp& family, const ReprConfig& config,
                       BundleCache& bundles, const std::vector<Context>& contexts, int episodes,
                       double gamma, RandomStream& rng);

/// Runs the three phases.  The transferred agent copies the source agent's
/// parameters but starts with a fresh optimizer, replay buffer and
/// exploration schedule; the baseline shares the transferred agent's target
/// contexts and evaluation schedule shape but nothing else.
SessionResult run_session(const SessionConfig& config);

}  // namespace cprep
