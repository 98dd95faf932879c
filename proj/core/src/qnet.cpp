#include "cprep/qnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cprep {

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, RandomStream& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform_real(-bound, bound);
  }
}

void fill_uniform(Eigen::VectorXd& v, double bound, RandomStream& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v.data()[i] = rng.uniform_real(-bound, bound);
  }
}

}  // namespace

QNetwork make_qnetwork(int input, int hidden, int actions, RandomStream& rng) {
  if (input < 1 || hidden < 1 || actions < 1) {
    throw std::invalid_argument("make_qnetwork: sizes must be positive");
  }
  QNetwork net;
  net.w1.resize(hidden, input);
  net.b1.resize(hidden);
  net.w2.resize(hidden, hidden);
  net.b2.resize(hidden);
  net.w3.resize(actions, hidden);
  net.b3.resize(actions);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(net.w1, bound1, rng);
  fill_uniform(net.b1, bound1, rng);
  fill_uniform(net.w2, bound2, rng);
  fill_uniform(net.b2, bound2, rng);
  fill_uniform(net.w3, bound2, rng);
  fill_uniform(net.b3, bound2, rng);
  return net;
}

Eigen::VectorXd forward(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs) {
  if (obs.size() != net.w1.cols()) {
    throw std::invalid_argument("forward: observation width does not match the network");
  }
  Eigen::VectorXd z1 = net.w1 * obs + net.b1;
  Eigen::VectorXd a1 = z1.cwiseMax(0.0);
  Eigen::VectorXd z2 = net.w2 * a1 + net.b2;
  Eigen::VectorXd a2 = z2.cwiseMax(0.0);
  return net.w3 * a2 + net.b3;
}

Eigen::MatrixXd forward_batch(const QNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  if (obs.rows() != net.w1.cols()) {
    throw std::invalid_argument("forward_batch: observation width does not match the network");
  }
  Eigen::MatrixXd z1 = (net.w1 * obs).colwise() + net.b1;
  Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd z2 = (net.w2 * a1).colwise() + net.b2;
  Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
  return (net.w3 * a2).colwise() + net.b3;
}

int greedy_action(const QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& obs) {
  const Eigen::VectorXd q = forward(net, obs);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return best;
}

QGradients zero_gradients(const QNetwork& net) {
  QGradients g;
  g.w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(net.b1.size());
  g.w2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
  g.b2 = Eigen::VectorXd::Zero(net.b2.size());
  g.w3 = Eigen::MatrixXd::Zero(net.w3.rows(), net.w3.cols());
  g.b3 = Eigen::VectorXd::Zero(net.b3.size());
  return g;
}

double td_loss_and_gradients(const QNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& obs,
                             const std::vector<int>& actions,
                             const Eigen::Ref<const Eigen::VectorXd>& targets, QGradients& grads) {
  const Eigen::Index batch = obs.cols();
  if (batch == 0) throw std::invalid_argument("td_loss_and_gradients: empty batch");
  if (static_cast<Eigen::Index>(actions.size()) != batch || targets.size() != batch) {
    throw std::invalid_argument("td_loss_and_gradients: batch sizes disagree");
  }

  Eigen::MatrixXd z1 = (net.w1 * obs).colwise() + net.b1;
  Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd z2 = (net.w2 * a1).colwise() + net.b2;
  Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
  Eigen::MatrixXd q = (net.w3 * a2).colwise() + net.b3;

  // Mean squared error on the taken actions only.
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int a = actions[static_cast<std::size_t>(b)];
    if (a < 0 || a >= static_cast<int>(q.rows())) {
      throw std::invalid_argument("td_loss_and_gradients: action out of range");
    }
    const double diff = q(a, b) - targets(b);
    loss += diff * diff;
    dq(a, b) = scale * diff;
  }
  loss /= static_cast<double>(batch);

  grads.w3 = dq * a2.transpose();
  grads.b3 = dq.rowwise().sum();
  Eigen::MatrixXd d2 = (net.w3.transpose() * dq).cwiseProduct(
      (z2.array() > 0.0).cast<double>().matrix());
  grads.w2 = d2 * a1.transpose();
  grads.b2 = d2.rowwise().sum();
  Eigen::MatrixXd d1 = (net.w2.transpose() * d2).cwiseProduct(
      (z1.array() > 0.0).cast<double>().matrix());
  grads.w1 = d1 * obs.transpose();
  grads.b1 = d1.rowwise().sum();
  return loss;
}

AdamState make_adam(const QNetwork& net, AdamOptions options) {
  AdamState state;
  state.options = options;
  state.steps = 0;
  state.first_moment = zero_gradients(net);
  state.second_moment = zero_gradients(net);
  return state;
}

namespace {

void adam_apply(Eigen::MatrixXd& param, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                const Eigen::MatrixXd& g, const AdamOptions& o, double bias1, double bias2) {
  m = o.beta1 * m + (1.0 - o.beta1) * g;
  v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
  param.array() -= o.learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + o.epsilon);
}

void adam_apply(Eigen::VectorXd& param, Eigen::VectorXd& m, Eigen::VectorXd& v,
                const Eigen::VectorXd& g, const AdamOptions& o, double bias1, double bias2) {
  m = o.beta1 * m + (1.0 - o.beta1) * g;
  v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
  param.array() -= o.learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + o.epsilon);
}

}  // namespace

void adam_update(QNetwork& net, AdamState& state, const QGradients& grads) {
  ++state.steps;
  const AdamOptions& o = state.options;
  const double bias1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.steps));
  const double bias2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.steps));
  adam_apply(net.w1, state.first_moment.w1, state.second_moment.w1, grads.w1, o, bias1, bias2);
  adam_apply(net.b1, state.first_moment.b1, state.second_moment.b1, grads.b1, o, bias1, bias2);
  adam_apply(net.w2, state.first_moment.w2, state.second_moment.w2, grads.w2, o, bias1, bias2);
  adam_apply(net.b2, state.first_moment.b2, state.second_moment.b2, grads.b2, o, bias1, bias2);
  adam_apply(net.w3, state.first_moment.w3, state.second_moment.w3, grads.w3, o, bias1, bias2);
  adam_apply(net.b3, state.first_moment.b3, state.second_moment.b3, grads.b3, o, bias1, bias2);
}

long parameter_count(const QNetwork& net) {
  return static_cast<long>(net.w1.size() + net.b1.size() + net.w2.size() + net.b2.size() +
                           net.w3.size() + net.b3.size());
}

Eigen::VectorXd flatten_parameters(const QNetwork& net) {
  Eigen::VectorXd flat(parameter_count(net));
  Eigen::Index at = 0;
  auto copy_in = [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) flat(at++) = block.data()[i];
  };
  copy_in(net.w1);
  copy_in(net.b1);
  copy_in(net.w2);
  copy_in(net.b2);
  copy_in(net.w3);
  copy_in(net.b3);
  return flat;
}

void set_parameters(QNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != parameter_count(net)) {
    throw std::invalid_argument("set_parameters: flat vector has the wrong length");
  }
  Eigen::Index at = 0;
  auto copy_out = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = flat(at++);
  };
  copy_out(net.w1);
  copy_out(net.b1);
  copy_out(net.w2);
  copy_out(net.b2);
  copy_out(net.w3);
  copy_out(net.b3);
}

Eigen::VectorXd flatten_gradients(const QGradients& grads) {
  Eigen::VectorXd flat(grads.w1.size() + grads.b1.size() + grads.w2.size() + grads.b2.size() +
                       grads.w3.size() + grads.b3.size());
  Eigen::Index at = 0;
  auto copy_in = [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) flat(at++) = block.data()[i];
  };
  copy_in(grads.w1);
  copy_in(grads.b1);
  copy_in(grads.w2);
  copy_in(grads.b2);
  copy_in(grads.w3);
  copy_in(grads.b3);
  return flat;
}

namespace {

constexpr char kMagic[4] = {'C', 'P', 'Q', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint file is truncated");
  return value;
}

void write_block(std::ostream& out, const double* data, Eigen::Index count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(sizeof(double)) * count);
}

void read_block(std::istream& in, double* data, Eigen::Index count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(sizeof(double)) * count);
  if (!in) throw std::runtime_error("checkpoint file is truncated");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const QNetwork& net, std::uint64_t seed,
                     std::uint64_t steps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, seed);
  write_pod(out, steps);
  write_pod(out, static_cast<std::uint32_t>(net.input_size()));
  write_pod(out, static_cast<std::uint32_t>(net.hidden_size()));
  write_pod(out, static_cast<std::uint32_t>(net.action_count()));
  write_block(out, net.w1.data(), net.w1.size());
  write_block(out, net.b1.data(), net.b1.size());
  write_block(out, net.w2.data(), net.w2.size());
  write_block(out, net.b2.data(), net.b2.size());
  write_block(out, net.w3.data(), net.w3.size());
  write_block(out, net.b3.data(), net.b3.size());
  if (!out) throw std::runtime_error("failed while writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint cp;
  cp.seed = read_pod<std::uint64_t>(in);
  cp.steps = read_pod<std::uint64_t>(in);
  const auto input = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto hidden = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto actions = static_cast<int>(read_pod<std::uint32_t>(in));
  if (input < 1 || hidden < 1 || actions < 1) {
    throw std::runtime_error("checkpoint declares impossible layer sizes");
  }
  cp.net.w1.resize(hidden, input);
  cp.net.b1.resize(hidden);
  cp.net.w2.resize(hidden, hidden);
  cp.net.b2.resize(hidden);
  cp.net.w3.resize(actions, hidden);
  cp.net.b3.resize(actions);
  read_block(in, cp.net.w1.data(), cp.net.w1.size());
  read_block(in, cp.net.b1.data(), cp.net.b1.size());
  read_block(in, cp.net.w2.data(), cp.net.w2.size());
  read_block(in, cp.net.b2.data(), cp.net.b2.size());
  read_block(in, cp.net.w3.data(), cp.net.w3.size());
  read_block(in, cp.net.b3.data(), cp.net.b3.size());
  return cp;
}

}  // namespace cprep
