#include <benchmark/benchmark.h>

#include "cvgae/metrics.hpp"
#include "cvgae/objectives.hpp"
#include "cvgae/trainer.hpp"

using namespace cvgae;

namespace {

// Random graph with Cora's node and edge counts when called with defaults.
Graph citation_sized(std::size_t n = 2708, std::size_t edges = 5278, std::size_t feat = 1433) {
  auto rng = rng_stream(1, Stream::kTestData);
  EdgeList e;
  while (e.size() < edges) {
    const auto u = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<NodeId>(rng.below(n));
    if (u != v) e.emplace_back(u, v);
  }
  Graph g{Adjacency::from_edges(n, e), Dense(n, feat), std::nullopt};
  // bag-of-words density of roughly 1.3%
  for (double& x : g.features.values()) x = rng.bernoulli(0.013) ? 1.0 : 0.0;
  return g;
}

const Graph& cora_like() {
  static const Graph g = citation_sized();
  return g;
}

void BM_Spmm(benchmark::State& state) {
  const auto prop = normalize_adjacency(cora_like());
  auto rng = rng_stream(2, Stream::kTestData);
  Dense d(cora_like().num_nodes(), static_cast<std::size_t>(state.range(0)));
  for (double& x : d.values()) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(spmm(prop, d));
}
BENCHMARK(BM_Spmm)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_EncodeBackward(benchmark::State& state) {
  const Graph& g = cora_like();
  const auto prop = normalize_adjacency(g);
  auto rng = rng_stream(3, Stream::kWeightInit);
  const EncoderParams p = EncoderParams::glorot(g.feature_dim(), 32, 16, rng);
  for (auto _ : state) {
    const Encoding enc = encode(p, prop, g.features);
    EncoderParams grad = EncoderParams::zeros_like(p);
    PosteriorGrad up = PosteriorGrad::zeros_like(enc.posterior);
    up.mu = enc.posterior.mu;
    encoder_backward(p, prop, g.features, enc, up, grad);
    benchmark::DoNotOptimize(grad.w1.values().data());
  }
}
BENCHMARK(BM_EncodeBackward)->Unit(benchmark::kMillisecond);

void BM_Reconstruction(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Graph g = citation_sized(n, 2 * n, 8);
  auto rng = rng_stream(4, Stream::kTestData);
  Posterior post{Dense(n, 16), Dense(n, 16)};
  for (double& x : post.mu.values()) x = 0.3 * rng.normal();
  const LatentSamples s = sample_latent(post, 1, rng);
  for (auto _ : state) {
    std::vector<Dense> dz;
    benchmark::DoNotOptimize(reconstruction_loglik(s, g.adjacency, true, &dz));
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_Reconstruction)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oNSquared)
    ->Unit(benchmark::kMillisecond);

// One full clustering-phase objective evaluation with gradients at Cora scale;
// multiply by the iteration count for a per-run estimate.
void BM_ClusteringStep(benchmark::State& state) {
  const Graph& g = cora_like();
  const auto prop = normalize_adjacency(g);
  auto rng = rng_stream(5, Stream::kWeightInit);
  EncoderParams p = EncoderParams::glorot(g.feature_dim(), 32, 16, rng);
  p.omega = Dense(7, 16);
  for (double& x : p.omega.values()) x = rng.normal();
  const Encoding enc = encode(p, prop, g.features);
  const auto cs = ClusterState::from_assignments(soft_assignments(enc.posterior.mu, p.omega), 0.2);
  for (auto _ : state) {
    const Encoding pos = encode(p, prop, g.features);
    const Encoding neg = encode(p, prop, g.features);
    auto noise = draw_noise(g.num_nodes(), 16, 1, rng);
    benchmark::DoNotOptimize(
        cvgae_objective(p, g.features, prop, pos, prop, neg, g.adjacency, cs.q, std::move(noise), {}));
  }
}
BENCHMARK(BM_ClusteringStep)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  auto rng = rng_stream(6, Stream::kTestData);
  Dense cost(k, k);
  for (double& x : cost.values()) x = rng.uniform(0.0, 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(7)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_SbmEndToEnd(benchmark::State& state) {
  SbmSpec spec;
  spec.sizes = {50, 50, 50};
  const Graph g = generate_sbm(spec);
  TrainConfig cfg;
  for (auto _ : state) {
    const PretrainOutput pre = pretrain(g, cfg);
    benchmark::DoNotOptimize(train_clustering(g, pre.params, cfg).iterations);
  }
}
BENCHMARK(BM_SbmEndToEnd)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
