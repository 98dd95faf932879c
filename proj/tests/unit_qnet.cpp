#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "cprep/qnet.hpp"
#include "cprep/rng.hpp"
#include "oracles.hpp"

namespace {

using namespace cprep;

/// Tiny fully specified network for hand-computed checks.
QNetwork hand_network() {
  QNetwork net;
  net.w1.resize(2, 2);
  net.w1 << 1.0, 0.0,
            0.0, 1.0;
  net.b1.resize(2);
  net.b1 << 0.5, -1.0;
  net.w2.resize(2, 2);
  net.w2 << 1.0, 1.0,
           -1.0, 1.0;
  net.b2.resize(2);
  net.b2 << 0.0, 0.25;
  net.w3.resize(2, 2);
  net.w3 << 1.0, 2.0,
            0.0, 1.0;
  net.b3.resize(2);
  net.b3 << -1.0, 3.0;
  return net;
}

TEST_SUITE("qnet") {
  TEST_CASE("construction draws bounded weights of the right shape") {
    RandomStream rng(mix_seed(3, 1));
    const QNetwork net = make_qnetwork(10, 64, 5, rng);
    CHECK(net.input_size() == 10);
    CHECK(net.hidden_size() == 64);
    CHECK(net.action_count() == 5);
    CHECK(net.w1.rows() == 64);
    CHECK(net.w1.cols() == 10);
    CHECK(net.w2.rows() == 64);
    CHECK(net.w2.cols() == 64);
    CHECK(net.w3.rows() == 5);
    CHECK(net.w3.cols() == 64);
    CHECK(net.b1.size() == 64);
    CHECK(net.b2.size() == 64);
    CHECK(net.b3.size() == 5);

    const double bound1 = 1.0 / std::sqrt(10.0);
    const double bound2 = 1.0 / 8.0;
    CHECK(net.w1.cwiseAbs().maxCoeff() <= bound1);
    CHECK(net.b1.cwiseAbs().maxCoeff() <= bound1);
    CHECK(net.w2.cwiseAbs().maxCoeff() <= bound2);
    CHECK(net.w3.cwiseAbs().maxCoeff() <= bound2);
    CHECK(net.w1.cwiseAbs().maxCoeff() > 0.0);

    RandomStream other(mix_seed(3, 2));
    const QNetwork second = make_qnetwork(10, 64, 5, other);
    CHECK((flatten_parameters(net) - flatten_parameters(second)).cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("forward matches a hand-computed network") {
    const QNetwork net = hand_network();
    Eigen::VectorXd obs(2);
    obs << 1.0, 2.0;
    // h1 = relu([1.5, 1]); h2 = relu([2.5, -0.25]) = [2.5, 0]; q = [1.5, 3].
    const Eigen::VectorXd q = forward(net, obs);
    REQUIRE(q.size() == 2);
    CHECK(q[0] == doctest::Approx(1.5));
    CHECK(q[1] == doctest::Approx(3.0));
    CHECK(greedy_action(net, obs) == 1);

    SUBCASE("the batched pass agrees column by column") {
      Eigen::MatrixXd batch(2, 2);
      batch.col(0) = obs;
      batch.col(1) << -1.0, 0.5;
      const Eigen::MatrixXd q_batch = forward_batch(net, batch);
      CHECK((q_batch.col(0) - forward(net, batch.col(0))).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((q_batch.col(1) - forward(net, batch.col(1))).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("greedy ties break toward the lowest index") {
      QNetwork tie = net;
      tie.w3.row(0) = tie.w3.row(1);
      tie.b3[0] = tie.b3[1];
      CHECK(greedy_action(tie, obs) == 0);
    }
  }

  TEST_CASE("finite differences confirm the analytic gradients") {
    RandomStream rng(mix_seed(17, 1));
    const QNetwork net = make_qnetwork(4, 8, 3, rng);
    const int batch = 5;
    Eigen::MatrixXd obs(4, batch);
    Eigen::VectorXd targets(batch);
    std::vector<int> actions;
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < 4; ++i) obs(i, b) = rng.uniform_real(-1.0, 1.0);
      targets[b] = rng.uniform_real(-1.0, 1.0);
      actions.push_back(rng.uniform_int(2));
    }

    QGradients grads = zero_gradients(net);
    td_loss_and_gradients(net, obs, actions, targets, grads);
    const Eigen::VectorXd analytic = flatten_gradients(grads);
    const Eigen::VectorXd numeric = oracles::fd_gradient(net, obs, actions, targets);
    REQUIRE(analytic.size() == numeric.size());
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
      CHECK(std::abs(analytic[i] - numeric[i]) / scale < 1e-6);
    }
  }

  TEST_CASE("the loss is the mean squared TD error") {
    const QNetwork net = hand_network();
    Eigen::MatrixXd obs(2, 2);
    obs.col(0) << 1.0, 2.0;   // q = [1.5, 3]
    obs.col(1) << 1.0, 2.0;
    Eigen::VectorXd targets(2);
    targets << 2.0, 2.0;
    QGradients grads = zero_gradients(net);
    const double loss = td_loss_and_gradients(net, obs, {0, 1}, targets, grads);
    // Errors: Q[0]-2 = -0.5 and Q[1]-2 = 1, so the mean square is 0.625.
    CHECK(loss == doctest::Approx(0.625));
  }

  TEST_CASE("adam takes the documented first step") {
    RandomStream rng(mix_seed(17, 2));
    QNetwork net = make_qnetwork(3, 4, 2, rng);
    const Eigen::VectorXd before = flatten_parameters(net);

    AdamState adam = make_adam(net);
    CHECK(adam.options.learning_rate == doctest::Approx(1e-4));
    CHECK(adam.options.beta1 == doctest::Approx(0.9));
    CHECK(adam.options.beta2 == doctest::Approx(0.999));

    QGradients grads = zero_gradients(net);
    grads.w1.setConstant(3.0);
    grads.b1.setConstant(3.0);
    grads.w2.setConstant(3.0);
    grads.b2.setConstant(3.0);
    grads.w3.setConstant(3.0);
    grads.b3.setConstant(3.0);
    adam_update(net, adam, grads);
    CHECK(adam.steps == 1);

    // With bias correction the first update is -lr * g / (|g| + eps) per entry.
    const Eigen::VectorXd after = flatten_parameters(net);
    const double expected = 1e-4 * 3.0 / (3.0 + 1e-8);
    for (Eigen::Index i = 0; i < before.size(); ++i) {
      CHECK(before[i] - after[i] == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  TEST_CASE("parameters flatten and restore exactly") {
    RandomStream rng(mix_seed(17, 3));
    QNetwork net = make_qnetwork(3, 4, 2, rng);
    CHECK(parameter_count(net) == 3 * 4 + 4 + 4 * 4 + 4 + 4 * 2 + 2);

    const Eigen::VectorXd flat = flatten_parameters(net);
    REQUIRE(flat.size() == parameter_count(net));
    Eigen::VectorXd shifted = flat;
    shifted[0] += 1.0;
    shifted[flat.size() - 1] -= 2.0;
    set_parameters(net, shifted);
    CHECK((flatten_parameters(net) - shifted).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd wrong(flat.size() - 1);
    wrong.setZero();
    CHECK_THROWS_AS(set_parameters(net, wrong), std::invalid_argument);
  }

  TEST_CASE("checkpoints round-trip bit for bit") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cprep_test_checkpoint";
    fs::create_directories(dir);
    const fs::path file = dir / "net.ckpt";

    RandomStream rng(mix_seed(17, 4));
    const QNetwork net = make_qnetwork(7, 16, 4, rng);
    save_checkpoint(file, net, 0x12345678abcdefULL, 987654321ULL);

    const Checkpoint restored = load_checkpoint(file);
    CHECK(restored.seed == 0x12345678abcdefULL);
    CHECK(restored.steps == 987654321ULL);
    CHECK(restored.net.input_size() == 7);
    CHECK(restored.net.action_count() == 4);
    CHECK((flatten_parameters(restored.net) - flatten_parameters(net)).cwiseAbs().maxCoeff() ==
          0.0);

    SUBCASE("saving twice produces identical bytes") {
      const fs::path again = dir / "net2.ckpt";
      save_checkpoint(again, net, 0x12345678abcdefULL, 987654321ULL);
      std::ifstream a(file, std::ios::binary), b(again, std::ios::binary);
      const std::vector<char> bytes_a((std::istreambuf_iterator<char>(a)),
                                      std::istreambuf_iterator<char>());
      const std::vector<char> bytes_b((std::istreambuf_iterator<char>(b)),
                                      std::istreambuf_iterator<char>());
      CHECK(bytes_a == bytes_b);
    }
    SUBCASE("truncated and missing files are rejected") {
      const fs::path cut = dir / "cut.ckpt";
      {
        std::ifstream in(file, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() / 2);
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      }
      CHECK_THROWS_AS(load_checkpoint(cut), std::runtime_error);
      CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), std::runtime_error);
    }
    fs::remove_all(dir);
  }
}

}  // namespace
