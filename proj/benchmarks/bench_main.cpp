#include <benchmark/benchmark.h>

#include <vector>

#include "qexplore/agent.hpp"
#include "qexplore/features.hpp"
#include "qexplore/nn.hpp"
#include "qexplore/rng.hpp"
#include "qexplore/sim.hpp"

using namespace qexplore;

namespace {

FeatureBundle sample_bundle(const FeatureConfig& cfg, Rng& rng) {
  FeatureBundle b = FeatureBundle::zeros(cfg);
  b.fcr = 3;
  for (auto& c : b.fcd) c = static_cast<std::uint32_t>(rng.uniform_int(0, 9));
  for (auto& x : b.txc) x = rng.uniform(-1.0, 1.0);
  return b;
}

void BM_Forward(benchmark::State& state) {
  FeatureConfig cfg;
  Rng rng(1);
  const QNetwork net = QNetwork::random(Architecture::for_features(cfg), rng);
  const FeatureBundle b = sample_bundle(cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(b));
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
  FeatureConfig cfg;
  Rng rng(2);
  const QNetwork net = QNetwork::random(Architecture::for_features(cfg), rng);
  const FeatureBundle b = sample_bundle(cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.backward(b, 1.0));
}
BENCHMARK(BM_Backward);

void BM_TrainBatch(benchmark::State& state) {
  FeatureConfig cfg;
  Rng rng(3);
  QNetwork net = QNetwork::random(Architecture::for_features(cfg), rng);
  AdamState adam = AdamState::for_parameters(net.parameters().size());
  std::vector<TrainingSample> batch;
  for (int i = 0; i < state.range(0); ++i) batch.push_back({sample_bundle(cfg, rng), 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(train_batch(net, adam, batch));
}
BENCHMARK(BM_TrainBatch)->Arg(1)->Arg(5);

void BM_MakeBundle(benchmark::State& state) {
  FeatureConfig cfg;
  Rng rng(4);
  QNetwork net = QNetwork::random(Architecture::for_features(cfg), rng);
  AdamState adam = AdamState::for_parameters(net.parameters().size());
  const EmbeddingProvider embeddings = EmbeddingProvider::hashed(cfg.embedding_dim);
  SimApp env(generate_app(GenParams{}));
  AgentConfig agent_cfg;
  DqnAgent agent(net, adam, embeddings, cfg, agent_cfg, 9, Policy::kUniformRandom);
  agent.begin_episode(env);
  IterationTrace last;
  for (int t = 0; t < 500; ++t) last = agent.run_iteration(env, t);
  const auto& page = agent.graph().page(last.next_page);
  for (auto _ : state) {
    for (EventId e : page.events) {
      benchmark::DoNotOptimize(make_bundle(agent.graph(), embeddings, e, cfg));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(page.events.size()));
}
BENCHMARK(BM_MakeBundle);

void BM_EpisodeSteps(benchmark::State& state) {
  FeatureConfig cfg;
  const AppSpec app = generate_app(GenParams{});
  AgentConfig agent_cfg;
  agent_cfg.step_limit = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng(5);
    QNetwork net = QNetwork::random(Architecture::for_features(cfg), rng);
    AdamState adam = AdamState::for_parameters(net.parameters().size());
    SimApp env(app);
    benchmark::DoNotOptimize(run_episode(net, adam, env,
                                         EmbeddingProvider::hashed(cfg.embedding_dim), cfg,
                                         agent_cfg, 6));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EpisodeSteps)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
