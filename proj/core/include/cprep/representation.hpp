#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cprep/gridworld.hpp"
#include "cprep/rm_generation.hpp"
#include "cprep/rm_planning.hpp"

namespace cprep {

enum class BaseRepresentation {
  Ctl,   ///< direct context features
  Pcg,   ///< one-hot context index over the contexts seen this session
  None,  ///< no context block; the agent sees task state (plus any labels) only
};

enum class RewardMode {
  Environment,  ///< the task reward, untouched
  RmRaw,        ///< replace with the machine transition reward
  RmShaped,     ///< machine reward plus the potential-based shaping term
};

/// How an agent observes and is rewarded.  Parsed from names such as
/// "CTL", "PCG+LTL", "CTL+RS", "CTL+DTL" and "CTL+C-PREP"; the C-PREP token
/// is shorthand for DTL combined with the shaped machine reward.  A name
/// that starts with an augmentation token instead of CTL/PCG (for example
/// plain "C-PREP") selects the None base: no context block at all.
struct ReprConfig {
  BaseRepresentation base = BaseRepresentation::Ctl;
  bool use_ltl = false;  ///< append the label emitted on the previous step
  bool use_dtl = false;  ///< append the label a greedy machine run wants next
  RewardMode reward = RewardMode::Environment;
  DesiredLabelMode dtl_mode = DesiredLabelMode::DeterministicFirst;
};

ReprConfig parse_repr_name(const std::string& name);
std::string repr_name(const ReprConfig& config);

/// Assigns one-hot indices to the contexts of a session (source followed by
/// target).  index_of throws std::invalid_argument for unknown contexts.
class PcgEncoder {
 public:
  PcgEncoder() = default;
  explicit PcgEncoder(const std::vector<Context>& contexts);

  int capacity() const { return capacity_; }
  int index_of(const Context& context) const;

 private:
  std::unordered_map<std::string, int> index_;
  int capacity_ = 0;
};

/// Machine vocabulary size implied by a family; constant across contexts, so
/// label blocks keep one width for a whole session.
int vocabulary_size(const Cmdp& family);

/// The context block of the observation (constant per context): direct
/// features for Ctl, a one-hot index for Pcg (encoder required).
std::vector<double> context_block(const Cmdp& family, const ReprConfig& config,
                                  const PcgEncoder* encoder, const Context& context);
int context_block_size(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder);

/// Total observation width for a session.
int observation_size(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder);

/// Assembles [task state | context block | last label | desired label] into
/// `out` (resized).  The label blocks are only present when enabled; `dtl`
/// supplies the cached desired label and may be null when DTL is disabled.
/// Throws std::invalid_argument if any block width disagrees with the
/// family-implied layout.
void build_observation(const Cmdp& family, const ReprConfig& config, const TaskMdp& task,
                       const EnvState& state, const std::vector<double>& context_features,
                       const RmRunState& run, const Label* dtl, std::vector<double>& out);

/// Reward handed to the learner for one step, per the configured mode.
/// `u_before` is the machine state before the step and `label` the emitted
/// label.  Machine arguments may be null only in Environment mode.
double training_reward(const ReprConfig& config, double env_reward, const RewardMachine* rm,
                       const RmValueTable* table, int u_before, const Label& label);

}  // namespace cprep
