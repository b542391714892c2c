#include <benchmark/benchmark.h>

#include <vector>

#include "snn/kernels.hpp"
#include "snn/random.hpp"

namespace k = snn::kernels;

namespace {

struct ConvCase {
  k::ConvGeom g;
  std::vector<float> x, w, b, y, dy, dx, dw, db;

  ConvCase(std::size_t batch, std::size_t cin, std::size_t hw, std::size_t cout,
           std::size_t kernel) {
    g = {batch, cin, hw, hw, cout, kernel, kernel, 1, kernel / 2};
    snn::Rng rng(7);
    auto fill = [&](std::vector<float>& v, std::size_t n) {
      v.resize(n);
      for (auto& e : v) e = rng.uniform(-1.0f, 1.0f);
    };
    fill(x, batch * g.in_plane());
    fill(w, cout * g.patch());
    fill(b, cout);
    fill(dy, batch * g.out_plane());
    y.assign(batch * g.out_plane(), 0.0f);
    dx.assign(x.size(), 0.0f);
    dw.assign(w.size(), 0.0f);
    db.assign(b.size(), 0.0f);
  }
};

// args: batch, cin, hw, cout, kernel
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({12, 24, 16, 24, 3})->Args({12, 64, 8, 16, 1})->Args({12, 16, 8, 64, 3})
      ->Unit(benchmark::kMillisecond);
}

template <bool Parallel>
void BM_conv_forward(benchmark::State& state) {
  ConvCase c(state.range(0), state.range(1), state.range(2), state.range(3), state.range(4));
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv2d_forward(c.g, c.x, c.w, c.b, c.y);
    else k::reference::conv2d_forward(c.g, c.x, c.w, c.b, c.y);
    benchmark::DoNotOptimize(c.y.data());
  }
  state.counters["MAC/s"] = benchmark::Counter(
      double(c.g.batch * c.g.out_plane() * c.g.patch()), benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Parallel>
void BM_conv_backward(benchmark::State& state) {
  ConvCase c(state.range(0), state.range(1), state.range(2), state.range(3), state.range(4));
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv2d_backward(c.g, c.x, c.w, c.dy, c.dx, c.dw, c.db);
    else k::reference::conv2d_backward(c.g, c.x, c.w, c.dy, c.dx, c.dw, c.db);
    benchmark::DoNotOptimize(c.dw.data());
  }
}

template <bool Parallel>
void BM_maxpool(benchmark::State& state) {
  const std::size_t n = state.range(0), ch = state.range(1), hw = state.range(2);
  k::PoolGeom g{n, ch, hw, hw, 3, 2};
  std::vector<float> x(n * ch * hw * hw), y(n * ch * g.out_h() * g.out_w());
  std::vector<std::uint32_t> arg(y.size());
  snn::Rng rng(3);
  for (auto& e : x) e = rng.uniform(-1.0f, 1.0f);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::maxpool2d_forward(g, x, y, arg);
    else k::reference::maxpool2d_forward(g, x, y, arg);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_conv_forward<false>)->Name("conv_forward/reference")->Apply(shapes);
BENCHMARK(BM_conv_forward<true>)->Name("conv_forward/parallel")->Apply(shapes);
BENCHMARK(BM_conv_backward<false>)->Name("conv_backward/reference")->Apply(shapes);
BENCHMARK(BM_conv_backward<true>)->Name("conv_backward/parallel")->Apply(shapes);
BENCHMARK(BM_maxpool<false>)->Name("maxpool/reference")->Args({12, 64, 16});
BENCHMARK(BM_maxpool<true>)->Name("maxpool/parallel")->Args({12, 64, 16});

BENCHMARK_MAIN();
