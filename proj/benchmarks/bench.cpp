#include <benchmark/benchmark.h>

#include <vector>

#include "cprep/dqn.hpp"
#include "cprep/product_solver.hpp"
#include "cprep/rm_generation.hpp"
#include "cprep/rm_planning.hpp"

namespace {

using namespace cprep;

void BM_MachineValueIteration(benchmark::State& state) {
  const Cmdp family = make_cmdp(EnvKind::OrderedNav, ContextSpace::PoiOrder);
  RandomStream rng(mix_seed(7, 0));
  const Context context = sample_context(family, rng);
  const GeneratedRm gen = generate(family, context);
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_iteration(gen.rm, 0.99));
  }
}
BENCHMARK(BM_MachineValueIteration);

void BM_SectorMachineGeneration(benchmark::State& state) {
  const Cmdp family = make_cmdp(EnvKind::PickupDropoff, ContextSpace::EntityLocation);
  RandomStream rng(mix_seed(7, 1));
  const Context context = sample_context(family, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(family, context));
  }
}
BENCHMARK(BM_SectorMachineGeneration);

void BM_ProductSolve(benchmark::State& state) {
  const Cmdp family = make_cmdp(EnvKind::GridNav, ContextSpace::EntityLocation);
  RandomStream rng(mix_seed(7, 2));
  const Context context = sample_context(family, rng);
  const TaskMdp task(family, context, mix_seed(7, 3));
  const GeneratedRm gen = generate(family, context);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_product(family, task, gen, nullptr, 0.99, ProductReward::Environment));
  }
}
BENCHMARK(BM_ProductSolve);

void BM_EnvStep(benchmark::State& state) {
  const Cmdp family = make_cmdp(EnvKind::MultiPoint, ContextSpace::EntityLocation);
  RandomStream rng(mix_seed(7, 4));
  const Context context = sample_context(family, rng);
  TaskMdp task(family, context, mix_seed(7, 5));
  EnvState current = task.reset();
  int action = 0;
  for (auto _ : state) {
    const TaskMdp::Outcome outcome = task.apply(current, action);
    current = outcome.done ? task.reset() : outcome.next;
    action = (action + 1) % task.action_count();
    benchmark::DoNotOptimize(current);
  }
}
BENCHMARK(BM_EnvStep);

void BM_TrainStep(benchmark::State& state) {
  const int width = 64;
  const int actions = 5;
  RandomStream rng(mix_seed(7, 6));
  QNetwork net = make_qnetwork(width, 64, actions, rng);
  const QNetwork target = net;
  AdamState adam = make_adam(net);
  const DqnConfig config;
  ReplayBuffer buffer(4096, width);
  std::vector<double> obs(width);
  std::vector<double> next_obs(width);
  for (int i = 0; i < 1024; ++i) {
    for (double& v : obs) v = rng.uniform_unit();
    for (double& v : next_obs) v = rng.uniform_unit();
    buffer.push(obs, rng.uniform_int(actions), rng.uniform_unit(), next_obs, rng.bernoulli(0.05));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_step(net, target, adam, buffer, config, rng));
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
