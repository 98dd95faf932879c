#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cprep/dqn.hpp"
#include "cprep/metrics.hpp"
#include "cprep/representation.hpp"

namespace cprep {

/// Everything fixed for one context: its machine, the solved machine values,
/// the greedy machine policy, and the context's observation block.
struct ContextBundle {
  Context context;
  GeneratedRm gen;
  RmValueTable table;
  RmGreedyPolicy policy;
  std::vector<double> context_features;
};

/// Builds bundles on demand and shares them: contexts that induce the same
/// machine still get their own entry, but a context seen again (for example
/// across training phases) reuses its bundle.  References stay valid for the
/// cache's lifetime.
class BundleCache {
 public:
  BundleCache(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder,
              double gamma);

  const ContextBundle& get(const Context& context);
  std::size_t size() const { return cache_.size(); }

 private:
  Cmdp family_;
  ReprConfig config_;
  const PcgEncoder* encoder_;
  double gamma_;
  std::unordered_map<std::string, std::unique_ptr<ContextBundle>> cache_;
};

/// The evaluation schedule of a training phase: the pre-training point plus
/// one point per percent of the budget, at env step round(i * total / 100).
struct EvalPoint {
  int progress_percent = 0;
  long env_steps = 0;
};
std::vector<EvalPoint> evaluation_points(long total_steps);

struct TrainOptions {
  long total_steps = 0;
  std::uint64_t seed = 0;
  const QNetwork* initial = nullptr;  ///< warm-start parameters (copied)
};

struct TrainResult {
  QNetwork net;
  TrainingHistory history;
  TrainingHistory aux_history;  ///< secondary evaluation curve, when requested
  long episodes = 0;
  double final_loss = 0.0;
};

/// Callback evaluating the current greedy policy; returns a mean return.
using EvalCallback = std::function<double(const QNetwork& net)>;

/// Trains for total_steps environment steps.  Each episode draws a training
/// context uniformly, steps its machine alongside the environment, augments
/// observations per the representation config, and rewards the learner per
/// the reward mode.  The optimizer, replay buffer and exploration schedule
/// always start fresh; `initial` only seeds the network parameters.  The
/// evaluation callback runs at every scheduled point (including step 0) and
/// fills the returned history; `aux_evaluate`, when given, is scored at the
/// same points into aux_history (used for generalization curves).
TrainResult run_training(const Cmdp& family, const ReprConfig& config, const DqnConfig& dqn,
                         const std::vector<Context>& contexts, const PcgEncoder* encoder,
                         BundleCache& bundles, const TrainOptions& options,
                         const EvalCallback& evaluate,
                         const EvalCallback* aux_evaluate = nullptr);

}  // namespace cprep
