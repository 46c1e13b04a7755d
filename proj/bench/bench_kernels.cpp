// Serial reference against the OpenMP kernels, over the number of samples.

#include "qf/embeddability.hpp"
#include "qf/kernels.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace qf;

struct Setup {
    StructurePtr s = std::make_shared<GaugedStructure>(heisenberg(), sym::FieldExpr::parse("x1/3 + x2*x3/5"),
                                                       sym::FieldExpr::parse("x2/2 - x1*x1/4"));
    QuasiFeffermanData d;
    Setup() {
        d.P = sym::FieldExpr::parse("1 + x1*x1/5 + sin(r)/4");
        d.H = sym::FieldExpr::parse("x2 + cos(r)/3");
        d.x = sym::FieldExpr::parse("x1/2 + I*x3/3");
        warm_up();
    }
};

const Setup& setup() {
    static const Setup s;
    return s;
}

template <Execution E>
void BM_curvature(benchmark::State& state) {
    const Setup& su = setup();
    const auto pts = sample_points(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(curvature_kernel(su.s, su.d, pts, E));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Execution E>
void BM_metric(benchmark::State& state) {
    const Setup& su = setup();
    const auto pts = sample_points(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(metric_kernel(su.s, su.d, pts, E));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Execution E>
void BM_check(benchmark::State& state) {
    const Setup& su = setup();
    const auto pts = sample_points(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(check_embeddability(su.s, su.d, pts, 1e-8, E));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_curvature<Execution::Serial>)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_curvature<Execution::Parallel>)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_metric<Execution::Serial>)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_metric<Execution::Parallel>)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_check<Execution::Serial>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_check<Execution::Parallel>)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
