#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cprep/rng.hpp"

namespace cprep {

/// Action-value network: input -> hidden -> hidden -> one output per action,
/// ReLU on the hidden layers, linear output layer.
struct QNetwork {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  int input_size() const { return static_cast<int>(w1.cols()); }
  int hidden_size() const { return static_cast<int>(w1.rows()); }
  int action_count() const { return static_cast<int>(w3.rows()); }
};

/// Initializes weights and biases uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
QNetwork make_qnetwork(int input, int hidden, int actions, RandomStream& rng);

Eigen::VectorXd forward(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs);
/// Batched forward pass; observations are columns.
Eigen::MatrixXd forward_batch(const QNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& obs);

/// Lowest-index argmax of the action values.
int greedy_action(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs);

struct QGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};
QGradients zero_gradients(const QNetwork& net);

/// Mean squared TD error over a batch:
///   loss = (1/B) * sum_b (Q(obs_b)[action_b] - target_b)^2
/// Observations are columns of `obs`.  Fills `grads` with the full backward
/// pass and returns the loss.
double td_loss_and_gradients(const QNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& obs,
                             const std::vector<int>& actions,
                             const Eigen::Ref<const Eigen::VectorXd>& targets, QGradients& grads);

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  long steps = 0;
  QGradients first_moment;
  QGradients second_moment;
};

AdamState make_adam(const QNetwork& net, AdamOptions options = {});
void adam_update(QNetwork& net, AdamState& state, const QGradients& grads);

/// Flat parameter order: w1, b1, w2, b2, w3, b3 (matrices in storage order).
long parameter_count(const QNetwork& net);
Eigen::VectorXd flatten_parameters(const QNetwork& net);
void set_parameters(QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& flat);
Eigen::VectorXd flatten_gradients(const QGradients& grads);

/// Binary network snapshot carrying the run seed and the training step count
/// at which it was taken.  Fixed little-endian layout; round-trips exactly.
void save_checkpoint(const std::filesystem::path& path, const QNetwork& net, std::uint64_t seed,
                     std::uint64_t steps);

struct Checkpoint {
  QNetwork net;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cprep
