#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cprep/session.hpp"
#include "cprep/training.hpp"

namespace {

using namespace cprep;

Context el_context(std::vector<Coord> cells) {
  Context context;
  context.space = ContextSpace::EntityLocation;
  context.entities = std::move(cells);
  return context;
}

/// Small, fast family: 4x4 grid, short episodes.
Cmdp small_family() {
  CmdpOptions options;
  options.width = 4;
  options.height = 4;
  options.episode_cap = 20;
  return make_cmdp(EnvKind::GridNav, ContextSpace::EntityLocation, options);
}

DqnConfig small_dqn() {
  DqnConfig dqn;
  dqn.buffer_capacity = 2000;
  dqn.batch_size = 16;
  dqn.learning_starts = 50;
  dqn.target_update_interval = 100;
  dqn.hidden_width = 16;
  return dqn;
}

TEST_SUITE("training") {
  TEST_CASE("evaluation points cover the budget percent by percent") {
    const std::vector<EvalPoint> points = evaluation_points(4'000'000);
    REQUIRE(points.size() == 101);
    CHECK(points.front().progress_percent == 0);
    CHECK(points.front().env_steps == 0);
    CHECK(points.back().progress_percent == 100);
    CHECK(points.back().env_steps == 4'000'000);
    CHECK(points[37].env_steps == 1'480'000);

    SUBCASE("tiny budgets round to the nearest step") {
      const std::vector<EvalPoint> tiny = evaluation_points(7);
      REQUIRE(tiny.size() == 101);
      CHECK(tiny.back().env_steps == 7);
      for (std::size_t i = 1; i < tiny.size(); ++i) {
        CHECK(tiny[i].env_steps >= tiny[i - 1].env_steps);
      }
      CHECK(tiny[50].env_steps == 4);  // round(3.5) away from zero
    }
    CHECK_THROWS_AS(evaluation_points(0), std::invalid_argument);
  }

  TEST_CASE("the bundle cache shares one entry per context") {
    const Cmdp family = small_family();
    const ReprConfig config = parse_repr_name("CTL+C-PREP");
    BundleCache cache(family, config, nullptr, 0.99);

    const Context a = el_context({{0, 1}});
    const Context b = el_context({{3, 3}});
    const ContextBundle& bundle_a = cache.get(a);
    CHECK(cache.size() == 1);
    const ContextBundle& again = cache.get(a);
    CHECK(&bundle_a == &again);
    CHECK(cache.size() == 1);
    cache.get(b);
    CHECK(cache.size() == 2);

    CHECK(bundle_a.gen.rm.state_count() == 5);  // 4 sectors + terminal
    CHECK(static_cast<int>(bundle_a.table.values.size()) == 5);
    CHECK(bundle_a.context_features == raw_context_features(family, a));
    CHECK(bundle_a.table.gamma == doctest::Approx(0.99));
  }

  TEST_CASE("training runs are deterministic and fill the history") {
    const Cmdp family = small_family();
    const ReprConfig config = parse_repr_name("CTL");
    const DqnConfig dqn = small_dqn();
    const std::vector<Context> contexts = {el_context({{0, 1}}), el_context({{2, 2}})};
    const PcgEncoder* encoder = nullptr;

    Eigen::VectorXd probe = Eigen::VectorXd::Zero(observation_size(family, config, encoder));
    probe[0] = 1.0;
    int calls = 0;
    const EvalCallback evaluate = [&](const QNetwork& net) {
      ++calls;
      return forward(net, probe)[0];
    };

    TrainOptions options;
    options.total_steps = 600;
    options.seed = 4242;

    BundleCache cache_a(family, config, encoder, dqn.gamma);
    const TrainResult a = run_training(family, config, dqn, contexts, encoder, cache_a, options,
                                       evaluate);
    CHECK(calls == 101);
    REQUIRE(a.history.size() == 101);
    CHECK(a.aux_history.size() == 0);
    CHECK(a.episodes > 0);
    const std::vector<EvalPoint> points = evaluation_points(options.total_steps);
    for (int i = 0; i < 101; ++i) {
      CHECK(a.history.points[static_cast<std::size_t>(i)].env_steps ==
            points[static_cast<std::size_t>(i)].env_steps);
      CHECK(a.history.points[static_cast<std::size_t>(i)].progress_percent == i);
    }

    SUBCASE("the same seed reproduces the run exactly") {
      calls = 0;
      BundleCache cache_b(family, config, encoder, dqn.gamma);
      const TrainResult b = run_training(family, config, dqn, contexts, encoder, cache_b, options,
                                         evaluate);
      CHECK(b.episodes == a.episodes);
      CHECK((flatten_parameters(b.net) - flatten_parameters(a.net)).cwiseAbs().maxCoeff() == 0.0);
      for (int i = 0; i < 101; ++i) {
        CHECK(b.history.return_at(i) == a.history.return_at(i));
      }
    }
    SUBCASE("a different seed changes the outcome") {
      TrainOptions other = options;
      other.seed = 4243;
      BundleCache cache_b(family, config, encoder, dqn.gamma);
      const TrainResult b = run_training(family, config, dqn, contexts, encoder, cache_b, other,
                                         evaluate);
      CHECK((flatten_parameters(b.net) - flatten_parameters(a.net)).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("warm starts copy the supplied parameters") {
      TrainOptions warm = options;
      warm.initial = &a.net;
      warm.total_steps = 100;
      calls = 0;
      BundleCache cache_b(family, config, encoder, dqn.gamma);
      const TrainResult b = run_training(family, config, dqn, contexts, encoder, cache_b, warm,
                                         evaluate);
      // The pre-training evaluation sees exactly the warm-start parameters.
      CHECK(b.history.return_at(0) == doctest::Approx(forward(a.net, probe)[0]));
    }
    SUBCASE("an auxiliary callback fills the second curve") {
      const EvalCallback aux = [](const QNetwork&) { return 0.125; };
      BundleCache cache_b(family, config, encoder, dqn.gamma);
      TrainOptions short_run = options;
      short_run.total_steps = 100;
      const TrainResult b = run_training(family, config, dqn, contexts, encoder, cache_b,
                                         short_run, evaluate, &aux);
      REQUIRE(b.aux_history.size() == 101);
      CHECK(b.aux_history.return_at(0) == 0.125);
      CHECK(b.aux_history.return_at(100) == 0.125);
    }
    SUBCASE("bad arguments are rejected") {
      BundleCache cache_b(family, config, encoder, dqn.gamma);
      CHECK_THROWS_AS(
          run_training(family, config, dqn, {}, encoder, cache_b, options, evaluate),
          std::invalid_argument);
      TrainOptions empty = options;
      empty.total_steps = 0;
      CHECK_THROWS_AS(
          run_training(family, config, dqn, contexts, encoder, cache_b, empty, evaluate),
          std::invalid_argument);
    }
  }

  TEST_CASE("policy evaluation is a reproducible mean discounted return") {
    const Cmdp family = small_family();
    const ReprConfig config = parse_repr_name("CTL");
    BundleCache cache(family, config, nullptr, 0.99);
    const std::vector<Context> contexts = {el_context({{0, 1}}), el_context({{3, 0}})};

    RandomStream init(mix_seed(1, 1));
    const QNetwork net = make_qnetwork(observation_size(family, config, nullptr), 16, 5, init);

    RandomStream eval_a(mix_seed(9, 9));
    RandomStream eval_b(mix_seed(9, 9));
    const double a = evaluate_policy(net, family, config, cache, contexts, 8, 0.99, eval_a);
    const double b = evaluate_policy(net, family, config, cache, contexts, 8, 0.99, eval_b);
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);  // discounted returns of a 0/1-reward task stay in [0, 1]

    RandomStream eval_c(mix_seed(9, 9));
    CHECK_THROWS_AS(evaluate_policy(net, family, config, cache, {}, 8, 0.99, eval_c),
                    std::invalid_argument);
    CHECK_THROWS_AS(evaluate_policy(net, family, config, cache, contexts, 0, 0.99, eval_c),
                    std::invalid_argument);
  }

  TEST_CASE("sessions run three phases over disjoint context sets") {
    SessionConfig config;
    config.family = small_family();
    config.repr = parse_repr_name("CTL+C-PREP");
    config.dqn = small_dqn();
    config.source_context_count = 2;
    config.target_context_count = 3;
    config.source_steps = 400;
    config.target_steps = 400;
    config.eval_episodes = 2;
    config.seed = 424242;

    const SessionResult result = run_session(config);
    CHECK(result.contexts.source.size() == 2);
    CHECK(result.contexts.target.size() == 3);
    CHECK(result.source_history.size() == 101);
    CHECK(result.generalization_history.size() == 101);
    CHECK(result.transferred_history.size() == 101);
    CHECK(result.target_history.size() == 101);
    CHECK(result.source_episodes > 0);
    CHECK(result.transferred_episodes > 0);
    CHECK(result.target_episodes > 0);
    CHECK(result.observation_width ==
          observation_size(config.family, config.repr, nullptr));
    CHECK(result.source_net.input_size() == result.observation_width);

    SUBCASE("the full session reproduces itself") {
      const SessionResult again = run_session(config);
      for (int i = 0; i < 101; ++i) {
        CHECK(again.source_history.return_at(i) == result.source_history.return_at(i));
        CHECK(again.generalization_history.return_at(i) ==
              result.generalization_history.return_at(i));
        CHECK(again.transferred_history.return_at(i) == result.transferred_history.return_at(i));
        CHECK(again.target_history.return_at(i) == result.target_history.return_at(i));
      }
      CHECK((flatten_parameters(again.source_net) - flatten_parameters(result.source_net))
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((flatten_parameters(again.transferred_net) -
             flatten_parameters(result.transferred_net))
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((flatten_parameters(again.target_net) - flatten_parameters(result.target_net))
                .cwiseAbs()
                .maxCoeff() == 0.0);
      for (std::size_t i = 0; i < result.contexts.target.size(); ++i) {
        CHECK(context_key(again.contexts.target[i]) == context_key(result.contexts.target[i]));
      }
    }
    SUBCASE("invalid session configs are rejected") {
      SessionConfig bad = config;
      bad.source_context_count = 0;
      CHECK_THROWS_AS(run_session(bad), std::invalid_argument);
      bad = config;
      bad.target_steps = 0;
      CHECK_THROWS_AS(run_session(bad), std::invalid_argument);
    }
  }
}

}  // namespace
