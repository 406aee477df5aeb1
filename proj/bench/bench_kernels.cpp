// Serial vs parallel timings for the OpenMP kernels. Argument 0 runs the
// serial reference, 1 the parallel path.
#include <benchmark/benchmark.h>

#include "pomp/machine.hpp"
#include "pomp/search.hpp"
#include "support/gradcheck.hpp"

namespace pomp {
namespace {

ExecPolicy PolicyArg(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::kSerial : ExecPolicy::kParallel;
}

// One CEM generation of 64 Maze candidates, 8 episodes each.
void BM_CemPopulation(benchmark::State& state) {
  auto factory = MakeFactory(TaskId::kMaze);
  CemConfig c;
  c.max_iterations = 1;
  EvalSettings eval;
  Objective objective = [&](const LatentVector& z, std::uint64_t seed) {
    return ProgramReturn(Decode(z), factory, seed, eval);
  };
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(Cem(objective, c, seed++, PolicyArg(state)));
  state.SetItemsProcessed(state.iterations() * c.population_size);
}

// 32 PSMP episodes on Maze under an untrained transition net.
void BM_Rollouts(benchmark::State& state) {
  ModeSet modes = PsmpModes(TaskId::kMaze);
  ProgramMachinePolicy policy(modes, ProgramMachinePolicy::DefaultNet(modes.size(), 8, 8),
                              MachineKind::kPsmp);
  Rng rng(1);
  policy.net().Initialize(rng);
  PpoConfig config;
  config.validation_episodes = 32;
  config.max_programs = 200;
  auto factory = MakeFactory(TaskId::kMaze);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(ValidationReturn(policy, factory, config, seed++, PolicyArg(state)));
  state.SetItemsProcessed(state.iterations() * config.validation_episodes);
}

// Loss and gradient over a 256-sample batch on the default 8x8 net.
void BM_PpoLossChunked(benchmark::State& state) {
  Rng rng(2);
  TransitionNet net(ProgramMachinePolicy::DefaultNet(3, 8, 8));
  net.Initialize(rng);
  const PpoBatch batch = testing::RandomBatch(net, 256, 0.05, rng);
  Eigen::VectorXd grad(net.ParamCount());
  for (auto _ : state) {
    grad.setZero();
    benchmark::DoNotOptimize(PpoLossChunked(net, batch, 0.05, {}, &grad, PolicyArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}

BENCHMARK(BM_CemPopulation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rollouts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PpoLossChunked)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pomp

BENCHMARK_MAIN();
