#include <vector>

#include <benchmark/benchmark.h>

#include "asaf/discriminator.hpp"
#include "asaf/eval.hpp"
#include "asaf/numkit.hpp"
#include "asaf/policies.hpp"
#include "asaf/train.hpp"

namespace {

using namespace asaf;

void BM_MlpForward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  Rng rng(1);
  const Mlp net = Mlp::initialized({8, width, width, 4}, rng);
  const std::vector<double> x(8, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(64)->Arg(256);

void BM_MlpForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  Rng rng(1);
  const Mlp net = Mlp::initialized({8, width, width, 4}, rng);
  const std::vector<double> x(8, 0.3);
  const std::vector<double> dy(4, 1.0);
  for (auto _ : state) {
    const MlpOutput out = net.forward(x);
    benchmark::DoNotOptimize(net.backward(out.tape, dy));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(64)->Arg(256);

void BM_BceLoss(benchmark::State& state) {
  const EnvSpec env = make_env("gridworld");
  const DemoSet demos = generate_expert_demos(env, static_cast<int>(state.range(0)) * 2, 0.25, 1);
  Rng rng(2);
  const std::vector<int> hidden{32};
  const Policy learner = Policy::for_env(env, hidden, rng);
  const Policy gen = Policy::for_env(env, hidden, rng);
  const std::span<const Trajectory> pool(demos.trajectories);
  const std::vector<Window> all = full_windows(pool);
  const std::size_t n = all.size() / 2;
  const std::vector<Window> expert(all.begin(), all.begin() + n);
  const std::vector<Window> generated(all.begin() + n, all.begin() + 2 * n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bce_loss(learner, gen, {pool, expert}, {pool, generated}));
  }
}
BENCHMARK(BM_BceLoss)->Arg(10)->Arg(40);

void BM_SoftValueIteration(benchmark::State& state) {
  const TabularMdp mdp = gridworld_mdp(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(soft_value_iteration(mdp, 0.25));
}
BENCHMARK(BM_SoftValueIteration)->Arg(20)->Arg(100);

void BM_ExactEnumeration(benchmark::State& state) {
  TabularMdp mdp = chain_mdp();
  mdp.horizon = static_cast<int>(state.range(0));
  const PolicyTable pi = maxent_policy_table(soft_value_iteration(mdp, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(exact_traj_distribution(mdp, pi));
}
BENCHMARK(BM_ExactEnumeration)->Arg(5)->Arg(8);

void BM_Occupancy(benchmark::State& state) {
  const TabularMdp mdp = gridworld_mdp(20);
  const PolicyTable pi = maxent_policy_table(soft_value_iteration(mdp, 0.25));
  for (auto _ : state) benchmark::DoNotOptimize(occupancy(mdp, pi));
}
BENCHMARK(BM_Occupancy);

}  // namespace

BENCHMARK_MAIN();
