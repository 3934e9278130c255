#include <benchmark/benchmark.h>

#include "shotwright/broadcast.hpp"
#include "shotwright/evaluation.hpp"
#include "shotwright/ops.hpp"
#include "shotwright/training.hpp"

using namespace shotwright;

namespace {

std::vector<Episode> synthetic_episodes(std::size_t scenes) {
  auto data = generate_markov_dataset({scenes, 12, 1.0, 1});
  apply_representation(data, ReprMode::Synthetic, 2.0, 1);
  return sample_episodes(data, 1);
}

std::vector<ContextState> states_of(const std::vector<Episode>& episodes, std::size_t n) {
  std::vector<ContextState> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(initial_context(episodes[k % episodes.size()]));
  return out;
}

void BM_ActorPredict(benchmark::State& state) {
  ActorNetwork actor(ActorConfig{}, 1);
  const auto states = states_of(synthetic_episodes(16), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(actor.predict(states));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ActorPredict)->Arg(1)->Arg(32)->Arg(256);

void BM_ActorForwardBackward(benchmark::State& state) {
  ActorNetwork actor(ActorConfig{}, 1);
  const auto states = states_of(synthetic_episodes(16), static_cast<std::size_t>(state.range(0)));
  const auto params = actor.parameters();
  for (auto _ : state) {
    Tape t;
    const auto heads = actor.forward(t, states);
    Var loss = ops::sum(t, heads.heads[0]);
    for (std::size_t i = 1; i < kAttributeCount; ++i) loss = ops::add(t, loss, ops::sum(t, heads.heads[i]));
    t.backward(loss);
    for (auto* p : params) p->zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ActorForwardBackward)->Arg(32)->Arg(160);

void BM_RlIteration(benchmark::State& state) {
  const auto episodes = synthetic_episodes(40);
  TrainConfig config;
  config.rl_iterations = 1;
  auto m = make_models(config);
  for (auto _ : state) benchmark::DoNotOptimize(train_rl(*m.actor, *m.critic, episodes, config));
}
BENCHMARK(BM_RlIteration)->Unit(benchmark::kMillisecond);

void BM_EvaluateRandom(benchmark::State& state) {
  const auto episodes = synthetic_episodes(200);
  RandomPredictor random(3);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(episodes, random, EvalOptions{1, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(episodes.size()));
}
BENCHMARK(BM_EvaluateRandom)->Unit(benchmark::kMillisecond);

void BM_HeuristicEdit(benchmark::State& state) {
  const auto scene = broadcast::generate_scene(1, 3080, 0.1);
  const auto omega = broadcast::style_preset("slide");
  for (auto _ : state) benchmark::DoNotOptimize(broadcast::heuristic_edit(scene, omega));
  state.SetItemsProcessed(state.iterations() * 3080);
}
BENCHMARK(BM_HeuristicEdit);

void BM_BroadcastIteration(benchmark::State& state) {
  const auto scene = broadcast::generate_scene(1, 3080, 0.1);
  const auto truth = broadcast::heuristic_edit(scene, broadcast::style_preset("slide"));
  broadcast::BroadcastConfig config;
  config.iterations = 1;
  for (auto _ : state) benchmark::DoNotOptimize(broadcast::train_broadcast_actor(scene, truth, config));
}
BENCHMARK(BM_BroadcastIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
