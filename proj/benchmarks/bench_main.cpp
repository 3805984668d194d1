#include <crtc/clustering.hpp>
#include <crtc/completion.hpp>
#include <crtc/fusion.hpp>
#include <crtc/knn_transfer.hpp>
#include <crtc/metrics.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace crtc;

namespace {

// Three-cluster blobs; paired < 0 keeps the data complete.
MultiViewDataset blobs(Index n_per_cluster, double paired = -1.0) {
  BlobOptions o;
  o.n_per_cluster = n_per_cluster;
  o.seed = 1;
  auto complete = synth_blobs(o);
  if (paired < 0.0) return complete;
  return apply_mask_protocol(complete, {MaskProtocol::Kind::PairedRate, paired, 1});
}

void BM_TransferGraph(benchmark::State& state) {
  const auto ds = blobs(state.range(0), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(build_transfer_graph(ds, 10));
  state.SetComplexityN(state.range(0) * 3);
}
BENCHMARK(BM_TransferGraph)->RangeMultiplier(2)->Range(50, 800)->Complexity();

void BM_CompletionEpoch(benchmark::State& state) {
  const auto ds = blobs(state.range(0), 0.5);
  const auto g = build_transfer_graph(ds, 10);
  auto net = CompletionNet::create({ds.dim(0), ds.dim(1)}, diff::Activation::Identity, 1);
  for (auto _ : state) pretrain_completion(net, ds, g, 1, {});
}
BENCHMARK(BM_CompletionEpoch)->Arg(100)->Arg(400);

void BM_FusionEpoch(benchmark::State& state) {
  const auto ds = blobs(state.range(0));
  FusionOptions o;
  o.embed_dim = 20;
  auto net = FusionNet::create({ds.dim(0), ds.dim(1)}, o, 1);
  const auto& views = ds.views();
  for (auto _ : state) pretrain_fusion(net, views, 1, {});
}
BENCHMARK(BM_FusionEpoch)->Arg(100)->Arg(400);

void BM_KMeans(benchmark::State& state) {
  const auto ds = blobs(state.range(0));
  KMeansOptions o;
  o.restarts = 20;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(ds.views()[0], 3, o));
}
BENCHMARK(BM_KMeans)->Arg(100)->Arg(400);

void BM_Metrics(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> label(0, 9);
  Labels truth(static_cast<std::size_t>(state.range(0))), pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = label(rng);
    pred[i] = label(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate(truth, pred));
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
