#include "cprep/rm_planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cprep/errors.hpp"

namespace cprep {

RmValueTable value_iteration(const RewardMachine& rm, double gamma,
                             ValueIterationOptions options) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("value_iteration: gamma must lie in [0, 1)");
  }
  check_rm(rm);

  const int n = rm.state_count();
  RmValueTable table;
  table.gamma = gamma;
  table.values.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double residual = 0.0;
    for (int u = 0; u < n; ++u) {
      if (rm.is_terminal(u)) {
        next[static_cast<std::size_t>(u)] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(u)]) {
        best = std::max(best, t.reward + gamma * table.values[static_cast<std::size_t>(t.to)]);
      }
      next[static_cast<std::size_t>(u)] = best;
      residual = std::max(residual, std::abs(best - table.values[static_cast<std::size_t>(u)]));
    }
    table.values.swap(next);
    table.iterations_run = iter;
    table.residual = residual;
    if (residual <= options.tolerance) return table;
  }
  throw ConvergenceError("value_iteration: no fixpoint after " +
                             std::to_string(options.max_iterations) +
                             " sweeps (residual " + std::to_string(table.residual) + ")",
                         table.residual);
}

DeterministicMdp build_equivalent_mdp(const RewardMachine& rm) {
  DeterministicMdp mdp;
  mdp.actions.resize(static_cast<std::size_t>(rm.state_count()));
  for (int u = 0; u < rm.state_count(); ++u) {
    if (rm.is_terminal(u)) {
      mdp.actions[static_cast<std::size_t>(u)].push_back({u, 0.0});
      continue;
    }
    for (const RmTransition& t : rm.outgoing[static_cast<std::size_t>(u)]) {
      mdp.actions[static_cast<std::size_t>(u)].push_back({t.to, t.reward});
    }
  }
  return mdp;
}

std::vector<int> greedy_transitions(const RewardMachine& rm, const RmValueTable& table,
                                    int state, double tie_epsilon) {
  if (state < 0 || state >= rm.state_count()) {
    throw std::invalid_argument("greedy_transitions: state id out of range");
  }
  if (static_cast<int>(table.values.size()) != rm.state_count()) {
    throw std::invalid_argument("greedy_transitions: value table does not match the machine");
  }
  std::vector<int> best;
  if (rm.is_terminal(state)) return best;

  const auto& list = rm.outgoing[static_cast<std::size_t>(state)];
  double best_value = -std::numeric_limits<double>::infinity();
  for (const RmTransition& t : list) {
    best_value = std::max(best_value,
                          t.reward + table.gamma * table.values[static_cast<std::size_t>(t.to)]);
  }
  for (int i = 0; i < static_cast<int>(list.size()); ++i) {
    const RmTransition& t = list[static_cast<std::size_t>(i)];
    const double q = t.reward + table.gamma * table.values[static_cast<std::size_t>(t.to)];
    if (q >= best_value - tie_epsilon) best.push_back(i);
  }
  return best;
}

RmGreedyPolicy make_greedy_policy(const RewardMachine& rm, const RmValueTable& table,
                                  double tie_epsilon) {
  RmGreedyPolicy policy;
  policy.optimal.resize(static_cast<std::size_t>(rm.state_count()));
  for (int u = 0; u < rm.state_count(); ++u) {
    policy.optimal[static_cast<std::size_t>(u)] = greedy_transitions(rm, table, u, tie_epsilon);
  }
  return policy;
}

Label desired_label(const RewardMachine& rm, const RmGreedyPolicy& policy, int state,
                    DesiredLabelMode mode, RandomStream* rng) {
  if (state < 0 || state >= rm.state_count()) {
    throw std::invalid_argument("desired_label: state id out of range");
  }
  if (rm.is_terminal(state)) return Label(rm.vocabulary.size());

  const std::vector<int>& options = policy.at(state);
  if (options.empty()) {
    throw std::invalid_argument("desired_label: no greedy transition recorded for state " +
                                rm.state_names[static_cast<std::size_t>(state)]);
  }
  int pick = options.front();
  if (mode == DesiredLabelMode::UniformSample) {
    if (rng == nullptr) {
      throw std::invalid_argument("desired_label: UniformSample requires a random stream");
    }
    pick = options[static_cast<std::size_t>(rng->uniform_index(options.size()))];
  }
  const RmTransition& t =
      rm.outgoing[static_cast<std::size_t>(state)][static_cast<std::size_t>(pick)];
  return Label::from_indices(rm.vocabulary.size(), t.guard.positives);
}

double shaped_reward(const RewardMachine& rm, const RmValueTable& table, int state,
                     const Label& label) {
  if (static_cast<int>(table.values.size()) != rm.state_count()) {
    throw std::invalid_argument("shaped_reward: value table does not match the machine");
  }
  const RmStepResult step = rm_step(rm, state, label);
  return step.reward + table.gamma * table.values[static_cast<std::size_t>(step.next)] -
         table.values[static_cast<std::size_t>(state)];
}

}  // namespace cprep
