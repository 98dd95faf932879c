#pragma once

#include <vector>

#include "cprep/reward_machine.hpp"
#include "cprep/rng.hpp"

namespace cprep {

/// Optimal discounted values per machine state, with solver telemetry.
struct RmValueTable {
  std::vector<double> values;
  double gamma = 0.0;
  int iterations_run = 0;
  double residual = 0.0;  ///< max-norm change of the final sweep

  double value(int state) const { return values.at(static_cast<std::size_t>(state)); }
};

struct ValueIterationOptions {
  double tolerance = 1e-10;
  int max_iterations = 1'000'000;
};

/// Solves V(u) = max over declared transitions (u -g-> u', r) of r + gamma*V(u'),
/// with V fixed to 0 at terminal states and initialized to 0 everywhere.
/// Sweeps until the max-norm update falls to the tolerance or below; throws
/// ConvergenceError if the iteration budget runs out first.  gamma must lie
/// in [0, 1); unguarded self-loops (reward 0) never beat the fixpoint and are
/// therefore not enumerated.
RmValueTable value_iteration(const RewardMachine& rm, double gamma,
                             ValueIterationOptions options = {});

/// Deterministic MDP whose states are the machine states and whose actions
/// are the declared transitions (in declaration order), plus one absorbing
/// zero-reward self-loop per terminal state.  Solving this MDP reproduces
/// the value-iteration fixpoint above.
struct DeterministicMdp {
  struct Arc {
    int next = 0;
    double reward = 0.0;
  };
  std::vector<std::vector<Arc>> actions;  ///< indexed by state

  int state_count() const { return static_cast<int>(actions.size()); }
};

DeterministicMdp build_equivalent_mdp(const RewardMachine& rm);

/// Indices (into outgoing[state]) of transitions whose one-step lookahead is
/// within tie_epsilon of the best; empty for terminal states.
std::vector<int> greedy_transitions(const RewardMachine& rm, const RmValueTable& table,
                                    int state, double tie_epsilon = 1e-9);

/// Greedy transition sets for every state.
struct RmGreedyPolicy {
  std::vector<std::vector<int>> optimal;  ///< indexed by state; terminal => empty

  const std::vector<int>& at(int state) const {
    return optimal.at(static_cast<std::size_t>(state));
  }
};

RmGreedyPolicy make_greedy_policy(const RewardMachine& rm, const RmValueTable& table,
                                  double tie_epsilon = 1e-9);

enum class DesiredLabelMode {
  DeterministicFirst,  ///< lowest-index optimal transition
  UniformSample,       ///< uniform draw among the optimal transitions
};

/// The label an optimal machine run should realize next from `state`: the
/// positive literals of one optimal outgoing transition, rendered over the
/// vocabulary.  Terminal states yield the all-false label.  UniformSample
/// requires an RNG.
Label desired_label(const RewardMachine& rm, const RmGreedyPolicy& policy, int state,
                    DesiredLabelMode mode = DesiredLabelMode::DeterministicFirst,
                    RandomStream* rng = nullptr);

/// Potential-based shaping with the optimal values as potential:
///   shaped = r + gamma * V(u') - V(u)
/// where (u', r) result from stepping `state` with `label` (terminal
/// potentials are zero by construction of the table).
double shaped_reward(const RewardMachine& rm, const RmValueTable& table, int state,
                     const Label& label);

}  // namespace cprep
