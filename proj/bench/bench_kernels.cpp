// Serial reference kernels against their OpenMP counterparts.
// Parallel cases take the thread count as their argument.

#include <benchmark/benchmark.h>

#include "seqtraj/parallel.hpp"
#include "seqtraj/reference.hpp"

using namespace seqtraj;

namespace {

Matrix stochastic(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    double s = 0;
    for (double& v : m.row(t)) s += (v = rng.uniform() + 1e-3);
    for (double& v : m.row(t)) v /= s;
  }
  return m;
}

struct Workload {
  std::vector<Matrix> queries;
  std::vector<Matrix> references;
  ClassifierParams params;
  std::vector<FeatureSequence> batch;
  FrozenEncoder encoder{7, 256, 64, 64};
  RasterImage image{64, 64};

  Workload() {
    Rng rng(2024);
    for (int i = 0; i < 64; ++i) queries.push_back(stochastic(rng, 32, 10));
    for (int i = 0; i < 10; ++i) references.push_back(stochastic(rng, 32, 10));
    params = init_params(10, 128, 1.0, rng);
    batch.resize(256);
    for (auto& s : batch) {
      s.frames = Matrix(32, 128);
      for (double& v : s.frames.data()) v = rng.normal();
    }
    for (double& p : image.pixels) p = rng.uniform();
  }
};

const Workload& workload() {
  static const Workload w;
  return w;
}

void BM_DistanceMatrixSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) benchmark::DoNotOptimize(reference::distance_matrix(w.queries[0], w.queries[1]));
}

void BM_DistanceMatrixParallel(benchmark::State& state) {
  const auto& w = workload();
  set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(distance_matrix(w.queries[0], w.queries[1]));
}

void BM_PairwiseSoftDtwSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::pairwise_soft_dtw(w.queries, w.references, 0.1));
  }
}

void BM_PairwiseSoftDtwParallel(benchmark::State& state) {
  const auto& w = workload();
  set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_soft_dtw(w.queries, w.references, 0.1));
}

void BM_ForwardBatchSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) benchmark::DoNotOptimize(reference::forward_batch(w.params, w.batch));
}

void BM_ForwardBatchParallel(benchmark::State& state) {
  const auto& w = workload();
  set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(w.params, w.batch));
}

void BM_EncodeSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) benchmark::DoNotOptimize(reference::encode(w.encoder, w.image));
}

void BM_EncodeParallel(benchmark::State& state) {
  const auto& w = workload();
  set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(w.encoder.encode(w.image));
}

}  // namespace

BENCHMARK(BM_DistanceMatrixSerial);
BENCHMARK(BM_DistanceMatrixParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();
BENCHMARK(BM_PairwiseSoftDtwSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseSoftDtwParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ForwardBatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBatchParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EncodeSerial);
BENCHMARK(BM_EncodeParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();
