#include <numeric>

#include <benchmark/benchmark.h>

#include "ncg/nls_kernels.hpp"
#include "ncg/problems.hpp"

namespace {

using namespace ncg;

struct Fixture {
  NlsData data;
  LinkSpec link{Link::Sigmoid, 1.0};
  Vector x;
  Vector v;
  std::vector<Index> idx;

  explicit Fixture(Index n, Index d = 64) : data(make_synthetic_nls(n, d, 1.0, Link::Sigmoid, 3)) {
    x = Vector::Constant(static_cast<Eigen::Index>(d), 0.1);
    v = Vector::LinSpaced(static_cast<Eigen::Index>(d), -1.0, 1.0);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), Index{0});
  }
};

template <bool Parallel>
void BM_ValueSum(benchmark::State& state) {
  Fixture fx(static_cast<Index>(state.range(0)));
  for (auto _ : state) {
    double s = Parallel ? kernels::parallel::value_sum(fx.data.a, fx.data.b, fx.link, fx.x, fx.idx)
                        : kernels::serial::value_sum(fx.data.a, fx.data.b, fx.link, fx.x, fx.idx);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_GradientSum(benchmark::State& state) {
  Fixture fx(static_cast<Index>(state.range(0)));
  Vector out;
  for (auto _ : state) {
    if (Parallel)
      kernels::parallel::gradient_sum(fx.data.a, fx.data.b, fx.link, fx.x, fx.idx, out);
    else
      kernels::serial::gradient_sum(fx.data.a, fx.data.b, fx.link, fx.x, fx.idx, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_GramApply(benchmark::State& state) {
  Fixture fx(static_cast<Index>(state.range(0)));
  Vector w;
  kernels::serial::curvature_weights(fx.data.a, fx.data.b, fx.link, fx.x, fx.idx, w);
  Vector out;
  for (auto _ : state) {
    if (Parallel)
      kernels::parallel::weighted_gram_apply(fx.data.a, fx.idx, w, fx.v, out);
    else
      kernels::serial::weighted_gram_apply(fx.data.a, fx.idx, w, fx.v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_ValueSum<false>)->Name("value_sum/serial")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_ValueSum<true>)->Name("value_sum/parallel")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_GradientSum<false>)->Name("gradient_sum/serial")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_GradientSum<true>)->Name("gradient_sum/parallel")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_GramApply<false>)->Name("gram_apply/serial")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_GramApply<true>)->Name("gram_apply/parallel")->Range(1 << 10, 1 << 17);

}  // namespace

BENCHMARK_MAIN();
