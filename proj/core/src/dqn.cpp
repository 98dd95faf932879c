#include "cprep/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace cprep {

ExplorationSchedule make_schedule(const DqnConfig& config, long total_steps) {
  ExplorationSchedule schedule;
  schedule.start = config.exploration_start;
  schedule.end = config.exploration_end;
  schedule.decay_steps = std::max<long>(
      1, static_cast<long>(std::llround(config.exploration_fraction *
                                        static_cast<double>(total_steps))));
  return schedule;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_width)
    : capacity_(capacity), obs_width_(obs_width) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  if (obs_width < 1) throw std::invalid_argument("ReplayBuffer: width must be positive");
}

void ReplayBuffer::push(const std::vector<double>& obs, int action, double reward,
                        const std::vector<double>& next_obs, bool terminal) {
  if (static_cast<int>(obs.size()) != obs_width_ ||
      static_cast<int>(next_obs.size()) != obs_width_) {
    throw std::invalid_argument("ReplayBuffer: observation width mismatch");
  }
  const std::size_t slot = next_slot_;
  const std::size_t offset = slot * static_cast<std::size_t>(obs_width_);
  if (slot >= size_) {
    // Grow storage only as far as actually used.
    obs_.resize(offset + static_cast<std::size_t>(obs_width_));
    next_obs_.resize(offset + static_cast<std::size_t>(obs_width_));
    actions_.resize(slot + 1);
    rewards_.resize(slot + 1);
    terminal_.resize(slot + 1);
  }
  for (int i = 0; i < obs_width_; ++i) {
    obs_[offset + static_cast<std::size_t>(i)] = static_cast<float>(obs[static_cast<std::size_t>(i)]);
    next_obs_[offset + static_cast<std::size_t>(i)] =
        static_cast<float>(next_obs[static_cast<std::size_t>(i)]);
  }
  actions_[slot] = action;
  rewards_[slot] = static_cast<float>(reward);
  terminal_[slot] = terminal ? 1 : 0;
  next_slot_ = (next_slot_ + 1) % capacity_;
  size_ = std::max(size_, slot + 1);
}

ReplayBuffer::Batch ReplayBuffer::sample(int batch, RandomStream& rng) const {
  if (batch < 1 || static_cast<std::size_t>(batch) > size_) {
    throw std::invalid_argument("ReplayBuffer: batch size exceeds stored transitions");
  }
  // Distinct indices: partial Fisher-Yates for dense draws, rejection with a
  // hash set when the buffer dwarfs the batch.
  std::vector<std::size_t> picks;
  picks.reserve(static_cast<std::size_t>(batch));
  if (size_ < static_cast<std::size_t>(batch) * 4) {
    std::vector<std::size_t> ids(size_);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    for (int i = 0; i < batch; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) +
          static_cast<std::size_t>(rng.uniform_index(size_ - static_cast<std::size_t>(i)));
      std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
      picks.push_back(ids[static_cast<std::size_t>(i)]);
    }
  } else {
    std::unordered_set<std::size_t> seen;
    while (picks.size() < static_cast<std::size_t>(batch)) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_index(size_));
      if (seen.insert(j).second) picks.push_back(j);
    }
  }

  Batch out;
  out.obs.resize(obs_width_, batch);
  out.next_obs.resize(obs_width_, batch);
  out.actions.resize(static_cast<std::size_t>(batch));
  out.rewards.resize(batch);
  out.terminal.resize(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const std::size_t slot = picks[static_cast<std::size_t>(b)];
    const std::size_t offset = slot * static_cast<std::size_t>(obs_width_);
    for (int i = 0; i < obs_width_; ++i) {
      out.obs(i, b) = static_cast<double>(obs_[offset + static_cast<std::size_t>(i)]);
      out.next_obs(i, b) = static_cast<double>(next_obs_[offset + static_cast<std::size_t>(i)]);
    }
    out.actions[static_cast<std::size_t>(b)] = actions_[slot];
    out.rewards(b) = static_cast<double>(rewards_[slot]);
    out.terminal[static_cast<std::size_t>(b)] = terminal_[slot];
  }
  return out;
}

double train_step(QNetwork& net, const QNetwork& target_net, AdamState& adam,
                  const ReplayBuffer& buffer, const DqnConfig& config, RandomStream& rng) {
  ReplayBuffer::Batch batch = buffer.sample(config.batch_size, rng);
  const Eigen::MatrixXd next_q = forward_batch(target_net, batch.next_obs);
  Eigen::VectorXd targets(batch.rewards.size());
  for (Eigen::Index b = 0; b < targets.size(); ++b) {
    double continuation = 0.0;
    if (!batch.terminal[static_cast<std::size_t>(b)]) {
      continuation = config.gamma * next_q.col(b).maxCoeff();
    }
    targets(b) = batch.rewards(b) + continuation;
  }
  QGradients grads = zero_gradients(net);
  const double loss = td_loss_and_gradients(net, batch.obs, batch.actions, targets, grads);
  adam_update(net, adam, grads);
  return loss;
}

int select_action(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs,
                  double epsilon, int action_count, RandomStream& rng) {
  if (rng.uniform_unit() < epsilon) {
    return rng.uniform_int(action_count);
  }
  return greedy_action(net, obs);
}

}  // namespace cprep
