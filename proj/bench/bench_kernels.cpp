#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "simcount/kernels.hpp"
#include "simcount/threading.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

simcount::kernels::ConvGeometry geometry(std::size_t size, std::size_t channels) {
  return {channels, size, size, channels, 3, 1, 1, size, size};
}

template <auto Kernel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <auto Kernel>
void BM_ConvForward(benchmark::State& state) {
  const auto g = geometry(static_cast<std::size_t>(state.range(0)), 32);
  const auto in = random_values(g.c_in * g.h * g.w, 3), k = random_values(g.c_out * g.c_in * 9, 4);
  const auto bias = random_values(g.c_out, 10);
  std::vector<double> out(g.c_out * g.h_out * g.w_out);
  for (auto _ : state) {
    Kernel(g, in, k, bias, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void BM_ConvBackwardInput(benchmark::State& state) {
  const auto g = geometry(static_cast<std::size_t>(state.range(0)), 32);
  const auto gout = random_values(g.c_out * g.h_out * g.w_out, 5), k = random_values(g.c_out * g.c_in * 9, 6);
  std::vector<double> gin(g.c_in * g.h * g.w);
  for (auto _ : state) {
    Kernel(g, gout, k, gin);
    benchmark::DoNotOptimize(gin.data());
  }
}

template <auto Kernel>
void BM_ConvBackwardKernel(benchmark::State& state) {
  const auto g = geometry(static_cast<std::size_t>(state.range(0)), 32);
  const auto in = random_values(g.c_in * g.h * g.w, 7), gout = random_values(g.c_out * g.h_out * g.w_out, 8);
  std::vector<double> gk(g.c_out * g.c_in * 9);
  for (auto _ : state) {
    Kernel(g, gout, in, gk);
    benchmark::DoNotOptimize(gk.data());
  }
}

template <auto Kernel>
void BM_Upsample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = random_values(16 * n * n, 9);
  std::vector<double> out(16 * 4 * n * n);
  for (auto _ : state) {
    Kernel(16, n, n, 2, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

namespace ref = simcount::kernels::reference;
namespace par = simcount::kernels::parallel;

BENCHMARK(BM_Matmul<ref::matmul>)->Name("matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<par::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_ConvForward<ref::conv2d_forward>)->Name("conv2d_forward/reference")->Arg(16)->Arg(32);
BENCHMARK(BM_ConvForward<par::conv2d_forward>)->Name("conv2d_forward/parallel")->Arg(16)->Arg(32);
BENCHMARK(BM_ConvBackwardInput<ref::conv2d_backward_input>)->Name("conv2d_backward_input/reference")->Arg(32);
BENCHMARK(BM_ConvBackwardInput<par::conv2d_backward_input>)->Name("conv2d_backward_input/parallel")->Arg(32);
BENCHMARK(BM_ConvBackwardKernel<ref::conv2d_backward_kernel>)->Name("conv2d_backward_kernel/reference")->Arg(32);
BENCHMARK(BM_ConvBackwardKernel<par::conv2d_backward_kernel>)->Name("conv2d_backward_kernel/parallel")->Arg(32);
BENCHMARK(BM_Upsample<ref::upsample_forward>)->Name("upsample_forward/reference")->Arg(32);
BENCHMARK(BM_Upsample<par::upsample_forward>)->Name("upsample_forward/parallel")->Arg(32);

}  // namespace

int main(int argc, char** argv) {
  simcount::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
