#include <benchmark/benchmark.h>

#include "perddqn/agent.hpp"
#include "perddqn/network.hpp"
#include "perddqn/replay.hpp"
#include "perddqn/world.hpp"

namespace {

using namespace perddqn;

replay::Transition random_transition(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> action(0, world::kActionCount - 1);
  replay::Transition t;
  for (auto& v : t.state) v = unit(rng);
  for (auto& v : t.next_state) v = unit(rng);
  t.action = action(rng);
  t.reward = unit(rng);
  t.done = unit(rng) < 0.05;
  return t;
}

void BM_Forward(benchmark::State& state) {
  Rng rng = make_rng(1);
  const nn::Network net = nn::init_network(rng);
  world::StateVector s{};
  s.fill(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, s));
}
BENCHMARK(BM_Forward);

void BM_BackwardBatch(benchmark::State& state) {
  Rng rng = make_rng(1);
  const nn::Network net = nn::init_network(rng);
  std::vector<replay::Transition> data;
  for (int i = 0; i < state.range(0); ++i) data.push_back(random_transition(rng));
  std::vector<nn::WeightedSample> batch;
  for (const auto& t : data) batch.push_back({t.state, t.action, t.reward, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward_weighted(net, batch));
}
BENCHMARK(BM_BackwardBatch)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  agent::AgentConfig config;
  config.algo = state.range(0) != 0 ? agent::Algo::Ddqn : agent::Algo::Dqn;
  config.replay_kind = state.range(1) != 0 ? agent::ReplayKind::Per : agent::ReplayKind::Uniform;
  Rng rng = make_rng(2);
  agent::Agent learner(config, rng);
  for (int i = 0; i < 3000; ++i) learner.remember(random_transition(rng));
  for (auto _ : state) benchmark::DoNotOptimize(learner.train_step(rng));
}
BENCHMARK(BM_TrainStep)->ArgsProduct({{0, 1}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Raycast(benchmark::State& state) {
  const auto map = world::load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  const world::Pose pose{1.25, 1.25, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(world::raycast(map, pose, 360, 3.5));
}
BENCHMARK(BM_Raycast);

void BM_SumTreeSample(benchmark::State& state) {
  replay::PrioritizedBuffer buffer;
  Rng rng = make_rng(3);
  for (int i = 0; i < 3000; ++i) buffer.push(random_transition(rng));
  for (auto _ : state) benchmark::DoNotOptimize(buffer.sample(64, rng));
}
BENCHMARK(BM_SumTreeSample);

}  // namespace

BENCHMARK_MAIN();
