// Serial reference kernels against the OpenMP kernels on the toy network sizes.
// Thread count for the OpenMP side comes from --threads=N (default: all cores).

#include <benchmark/benchmark.h>

#include <cstdlib>
#include <cstring>

#include "ussci/core/parallel.hpp"
#include "ussci/core/random.hpp"
#include "ussci/reference.hpp"
#include "ussci/sensing.hpp"

namespace {

using namespace ussci;

Tensor<float> randn(Shape s, std::uint64_t seed) {
  Tensor<float> t(std::move(s));
  CounterRng rng(seed, 0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.normal(i));
  return t;
}

ConvSpec conv_spec() {
  ConvSpec s;
  s.kernel = {3, 3, 3};
  s.padding = {1, 1, 1};
  s.in_channels = 12;
  s.out_channels = 12;
  return s;
}

ConvSpec up_spec() {
  ConvSpec s;
  s.kernel = {1, 2, 2};
  s.stride = {1, 2, 2};
  s.in_channels = 12;
  s.out_channels = 6;
  return s;
}

AttentionParams<float> attn_params(std::size_t d) {
  return {randn({d, d}, 1), randn({d, d}, 2), randn({d, d}, 3), randn({d, d}, 4), randn({d}, 5), 2};
}

void BM_Conv3dSerial(benchmark::State& st) {
  const auto s = conv_spec();
  auto x = randn({8, 16, 16, 12}, 7), w = randn(conv3d_weight_shape(s), 8), b = randn({12}, 9);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv3d(x, s, w, b));
}
void BM_Conv3dOmp(benchmark::State& st) {
  const auto s = conv_spec();
  auto x = randn({8, 16, 16, 12}, 7), w = randn(conv3d_weight_shape(s), 8), b = randn({12}, 9);
  for (auto _ : st) benchmark::DoNotOptimize(conv3d(x, s, w, b));
}

void BM_TransposedSerial(benchmark::State& st) {
  const auto s = up_spec();
  auto x = randn({8, 16, 16, 12}, 7), w = randn(transposed_conv3d_weight_shape(s), 8), b = randn({6}, 9);
  for (auto _ : st) benchmark::DoNotOptimize(reference::transposed_conv3d(x, s, w, b));
}
void BM_TransposedOmp(benchmark::State& st) {
  const auto s = up_spec();
  auto x = randn({8, 16, 16, 12}, 7), w = randn(transposed_conv3d_weight_shape(s), 8), b = randn({6}, 9);
  for (auto _ : st) benchmark::DoNotOptimize(transposed_conv3d(x, s, w, b));
}

// 64 groups of 16 tokens, width 12.
void BM_AttentionSerial(benchmark::State& st) {
  auto p = attn_params(12);
  auto x = randn({64, 16, 12}, 10);
  for (auto _ : st) {
    for (std::size_t l = 0; l < 64; ++l) {
      Tensor<float> g(Shape{16, 12}, std::vector<float>(x.data() + l * 192, x.data() + (l + 1) * 192));
      benchmark::DoNotOptimize(reference::dense_attention(g, p));
    }
  }
}
void BM_AttentionOmp(benchmark::State& st) {
  auto p = attn_params(12);
  auto x = randn({64, 16, 12}, 10);
  for (auto _ : st) benchmark::DoNotOptimize(attention(x, p));
}

void BM_EncodeSerial(benchmark::State& st) {
  auto m = gen_uss(8, 256, 256, 1);
  auto x = randn({8, 256, 256}, 11);
  for (auto _ : st) benchmark::DoNotOptimize(reference::encode(x, m));
}
void BM_EncodeOmp(benchmark::State& st) {
  auto m = gen_uss(8, 256, 256, 1);
  auto x = randn({8, 256, 256}, 11);
  for (auto _ : st) benchmark::DoNotOptimize(encode(x, m));
}

BENCHMARK(BM_Conv3dSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3dOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransposedSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransposedOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AttentionSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AttentionOmp)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EncodeSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EncodeOmp)->Unit(benchmark::kMicrosecond);

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], "--threads=", 10) == 0) {
      set_num_threads(std::atoi(argv[i] + 10));
      for (int j = i; j + 1 < argc; ++j) argv[j] = argv[j + 1];
      --argc;
      break;
    }
  }
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
