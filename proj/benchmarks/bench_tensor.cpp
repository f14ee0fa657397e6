#include <benchmark/benchmark.h>

#include "posekit/tai.hpp"
#include "posekit/tensor.hpp"
#include "posekit/vae.hpp"

using namespace posekit;

static void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Tensor a = Tensor::uniform({n, n}, 1);
  const Tensor b = Tensor::uniform({n, n}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

static void BM_LayerNorm(benchmark::State& state) {
  const Tensor x = Tensor::uniform({64, 128}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer_norm(x));
  }
}
BENCHMARK(BM_LayerNorm);

static void BM_Attention(benchmark::State& state) {
  const int f = static_cast<int>(state.range(0));
  const Tensor q = Tensor::uniform({f, 64}, 4);
  const Tensor k = Tensor::uniform({f, 64}, 5);
  const Tensor v = Tensor::uniform({f, 64}, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attention(q, k, v));
  }
}
BENCHMARK(BM_Attention)->Arg(16)->Arg(72);

static void BM_TaiInject(benchmark::State& state) {
  TaiParams params = TaiParams::init(4, 16, 64, 7);
  params.gamma.value = Tensor::uniform({64}, 8, 0.8);
  const Tensor z_k = Tensor::uniform({16, 16, 64}, 9);
  const Tensor z_p = Tensor::uniform({16, 16, 64}, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tai_inject(z_k, z_p, params));
  }
}
BENCHMARK(BM_TaiInject);

static void BM_VaeEncode(benchmark::State& state) {
  const MotionClip clip = pad_clip(Tensor::uniform({16, 48, 80, 3}, 11, 0.9));
  const VaeParams params = VaeParams::init(3, 12);
  PoseLatent mean, logvar;
  for (auto _ : state) {
    encode(clip, params, mean, logvar);
    benchmark::DoNotOptimize(mean);
  }
}
BENCHMARK(BM_VaeEncode);

static void BM_VaeTrainStep(benchmark::State& state) {
  const MotionClip clip = pad_clip(Tensor::uniform({16, 48, 80, 3}, 13, 0.9));
  VaeParams params = VaeParams::init(3, 14);
  std::uint64_t noise = 0;
  for (auto _ : state) {
    vae_backward(clip, params, 1e-3, noise++);
    sgd_step(params.parameters(), 0.5);
  }
}
BENCHMARK(BM_VaeTrainStep);

BENCHMARK_MAIN();
