#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cprep/qnet.hpp"
#include "cprep/rng.hpp"

namespace cprep {

struct DqnConfig {
  double gamma = 0.99;
  double learning_rate = 1e-4;
  int batch_size = 32;
  std::size_t buffer_capacity = 1'000'000;
  long learning_starts = 1'000;    ///< env steps before updates begin
  int train_frequency = 4;         ///< env steps between update rounds
  int gradient_steps = 4;          ///< updates per round
  long target_update_interval = 10'000;  ///< env steps between target syncs
  double exploration_start = 1.0;
  double exploration_end = 0.05;
  double exploration_fraction = 0.5;  ///< share of training spent annealing
  int hidden_width = 64;
};

/// Linear annealing from `start` to `end` over `decay_steps` env steps, then
/// flat at `end`.
struct ExplorationSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 1;

  double epsilon(long step) const {
    if (step >= decay_steps) return end;
    if (step <= 0) return start;
    const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
    return start + frac * (end - start);
  }
};

ExplorationSchedule make_schedule(const DqnConfig& config, long total_steps);

/// Fixed-capacity ring buffer of transitions.  Observations are stored as
/// floats; storage is grown lazily so small runs never touch the full
/// capacity.  `terminal` marks genuine episode completion (bootstrapping is
/// cut), not cap truncation.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_width);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_width() const { return obs_width_; }

  void push(const std::vector<double>& obs, int action, double reward,
            const std::vector<double>& next_obs, bool terminal);

  struct Batch {
    Eigen::MatrixXd obs;       ///< (width, B)
    Eigen::MatrixXd next_obs;  ///< (width, B)
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    std::vector<std::uint8_t> terminal;
  };
  /// Uniform sample of distinct stored transitions.  batch must not exceed size().
  Batch sample(int batch, RandomStream& rng) const;

 private:
  std::size_t capacity_;
  int obs_width_;
  std::size_t size_ = 0;
  std::size_t next_slot_ = 0;
  std::vector<float> obs_;
  std::vector<float> next_obs_;
  std::vector<int> actions_;
  std::vector<float> rewards_;
  std::vector<std::uint8_t> terminal_;
};

/// One optimization step: sample a batch, form targets
///   y = r + gamma * max_a Q_target(s', a)   (zero continuation on terminal)
/// and apply one optimizer update to the mean squared TD error.  Returns the
/// loss.
double train_step(QNetwork& net, const QNetwork& target_net, AdamState& adam,
                  const ReplayBuffer& buffer, const DqnConfig& config, RandomStream& rng);

/// Epsilon-greedy draw: with probability epsilon a uniform action, otherwise
/// the lowest-index greedy action.
int select_action(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs,
                  double epsilon, int action_count, RandomStream& rng);

}  // namespace cprep
