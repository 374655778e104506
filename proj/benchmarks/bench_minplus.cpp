#include <benchmark/benchmark.h>

#include "wkam/action.hpp"
#include "wkam/model.hpp"

using namespace wkam;

namespace {

MechanicalSystem pendulum() {
    return MechanicalSystem::from_json_text(
        R"({"dim":1,"metric":{"type":"identity"},
            "potential":{"fourier":[[1,1.0,0.0],[0,-1.0,0.0]]}})");
}

void BM_OneStepMatrix(benchmark::State& state) {
    const auto sys = pendulum();
    const TorusGrid grid(1, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        CostMatrix k = one_step_matrix(sys, Vec(0.0), grid, 0.02, 8.0);
        benchmark::DoNotOptimize(k.k.data());
    }
}
BENCHMARK(BM_OneStepMatrix)->Arg(128)->Arg(256)->Arg(512);

void BM_Compose(benchmark::State& state) {
    const auto sys = pendulum();
    const TorusGrid grid(1, static_cast<int>(state.range(0)));
    const CostMatrix k = one_step_matrix(sys, Vec(0.0), grid, 0.02, 8.0);
    for (auto _ : state) {
        CostMatrix c = compose(k, k);
        benchmark::DoNotOptimize(c.k.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size()) *
                            grid.size() * grid.size());
}
BENCHMARK(BM_Compose)->Arg(128)->Arg(256)->Arg(512);

void BM_PeierlsBarrier(benchmark::State& state) {
    const auto sys = pendulum();
    const TorusGrid grid(1, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        PairTable h = peierls_barrier(sys, Vec(0.0), grid, 0.0, {});
        benchmark::DoNotOptimize(h.h.data());
    }
}
BENCHMARK(BM_PeierlsBarrier)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
