#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "cprep/dqn.hpp"
#include "cprep/rng.hpp"

namespace {

using namespace cprep;

TEST_SUITE("dqn") {
  TEST_CASE("the exploration schedule anneals linearly") {
    DqnConfig config;
    const ExplorationSchedule schedule = make_schedule(config, 1000);
    CHECK(schedule.decay_steps == 500);  // half the budget by default
    CHECK(schedule.epsilon(0) == doctest::Approx(1.0));
    CHECK(schedule.epsilon(-5) == doctest::Approx(1.0));
    CHECK(schedule.epsilon(250) == doctest::Approx(0.525));
    CHECK(schedule.epsilon(500) == doctest::Approx(0.05));
    CHECK(schedule.epsilon(10000) == doctest::Approx(0.05));
  }

  TEST_CASE("replay buffers store, wrap and sample distinct transitions") {
    ReplayBuffer buffer(4, 2);
    CHECK(buffer.capacity() == 4);
    CHECK(buffer.obs_width() == 2);
    CHECK(buffer.size() == 0);

    for (int i = 0; i < 3; ++i) {
      buffer.push({double(i), 0.5}, i, 0.25 * i, {double(i + 1), 0.5}, i == 2);
    }
    CHECK(buffer.size() == 3);

    RandomStream rng(mix_seed(23, 1));
    SUBCASE("a full-size sample returns every stored transition once") {
      const ReplayBuffer::Batch batch = buffer.sample(3, rng);
      REQUIRE(batch.actions.size() == 3);
      CHECK(batch.obs.rows() == 2);
      CHECK(batch.obs.cols() == 3);
      std::set<int> actions(batch.actions.begin(), batch.actions.end());
      CHECK(actions == std::set<int>{0, 1, 2});
      for (int b = 0; b < 3; ++b) {
        const int i = batch.actions[static_cast<std::size_t>(b)];
        CHECK(batch.obs(0, b) == doctest::Approx(double(i)));
        CHECK(batch.next_obs(0, b) == doctest::Approx(double(i + 1)));
        CHECK(batch.rewards[b] == doctest::Approx(0.25 * i));
        CHECK(batch.terminal[static_cast<std::size_t>(b)] == (i == 2 ? 1 : 0));
      }
    }
    SUBCASE("oversized requests are rejected") {
      CHECK_THROWS_AS(buffer.sample(4, rng), std::invalid_argument);
      CHECK_THROWS_AS(buffer.sample(0, rng), std::invalid_argument);
    }
    SUBCASE("the ring wraps around and overwrites the oldest entries") {
      buffer.push({3.0, 0.5}, 3, 0.75, {4.0, 0.5}, false);
      buffer.push({4.0, 0.5}, 4, 1.0, {5.0, 0.5}, false);
      CHECK(buffer.size() == 4);
      const ReplayBuffer::Batch batch = buffer.sample(4, rng);
      std::set<int> actions(batch.actions.begin(), batch.actions.end());
      // Action 0 was the oldest transition and has been overwritten.
      CHECK(actions == std::set<int>{1, 2, 3, 4});
    }
    SUBCASE("widths must match") {
      CHECK_THROWS_AS(buffer.push({1.0}, 0, 0.0, {1.0, 2.0}, false), std::invalid_argument);
    }
  }

  TEST_CASE("action selection is greedy at zero epsilon and uniform at one") {
    RandomStream init(mix_seed(23, 2));
    const QNetwork net = make_qnetwork(3, 8, 4, init);
    Eigen::VectorXd obs(3);
    obs << 0.3, -0.2, 0.9;
    const int greedy = greedy_action(net, obs);

    RandomStream rng(mix_seed(23, 3));
    for (int i = 0; i < 20; ++i) {
      CHECK(select_action(net, obs, 0.0, 4, rng) == greedy);
    }
    std::set<int> seen;
    for (int i = 0; i < 200; ++i) {
      seen.insert(select_action(net, obs, 1.0, 4, rng));
    }
    CHECK(seen == std::set<int>{0, 1, 2, 3});
  }

  TEST_CASE("one training step regresses toward the bootstrap target") {
    RandomStream init(mix_seed(23, 4));
    QNetwork net = make_qnetwork(2, 8, 3, init);
    QNetwork target_net = make_qnetwork(2, 8, 3, init);
    AdamState adam = make_adam(net);

    DqnConfig config;
    config.batch_size = 1;
    ReplayBuffer buffer(8, 2);
    // Dyadic coordinates survive the buffer's float storage exactly, so the
    // hand-computed loss can be compared at full precision.
    const std::vector<double> obs = {0.25, -0.5};
    const std::vector<double> next_obs = {0.625, 0.125};
    buffer.push(obs, 2, 0.5, next_obs, false);

    Eigen::VectorXd obs_vec(2), next_vec(2);
    obs_vec << 0.25, -0.5;
    next_vec << 0.625, 0.125;
    const double target =
        0.5 + config.gamma * forward(target_net, next_vec).maxCoeff();
    const double q = forward(net, obs_vec)[2];
    const double expected_loss = (q - target) * (q - target);

    RandomStream rng(mix_seed(23, 5));
    const double loss = train_step(net, target_net, adam, buffer, config, rng);
    CHECK(loss == doctest::Approx(expected_loss).epsilon(1e-10));

    SUBCASE("terminal transitions cut the bootstrap") {
      QNetwork net2 = make_qnetwork(2, 8, 3, init);
      AdamState adam2 = make_adam(net2);
      ReplayBuffer done_buffer(8, 2);
      done_buffer.push(obs, 1, 0.5, next_obs, true);
      const double q2 = forward(net2, obs_vec)[1];
      const double expected2 = (q2 - 0.5) * (q2 - 0.5);
      const double loss2 = train_step(net2, target_net, adam2, done_buffer, config, rng);
      CHECK(loss2 == doctest::Approx(expected2).epsilon(1e-10));
    }
  }

  TEST_CASE("repeated updates shrink the loss on a fixed batch") {
    RandomStream init(mix_seed(23, 6));
    QNetwork net = make_qnetwork(2, 16, 2, init);
    const QNetwork target_net = net;
    AdamState adam = make_adam(net, {.learning_rate = 1e-2});

    DqnConfig config;
    config.batch_size = 8;
    ReplayBuffer buffer(8, 2);
    for (int i = 0; i < 8; ++i) {
      // All transitions are terminal, so the targets are the plain rewards.
      buffer.push({double(i) / 8.0, 0.5}, i % 2, (i % 2 == 0) ? 1.0 : -1.0,
                  {0.0, 0.0}, true);
    }

    RandomStream rng(mix_seed(23, 7));
    const double first = train_step(net, target_net, adam, buffer, config, rng);
    double last = first;
    for (int i = 0; i < 300; ++i) {
      last = train_step(net, target_net, adam, buffer, config, rng);
    }
    CHECK(last < 0.1 * first);
  }
}

}  // namespace
