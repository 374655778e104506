#include <benchmark/benchmark.h>

#include "wkam/weakkam.hpp"

using namespace wkam;

namespace {

MechanicalSystem separable2d() {
    return MechanicalSystem::from_json_text(
        R"({"dim":2,"metric":{"type":"identity"},
            "potential":{"fourier":[[1,0,0.5,0.0],[0,0,-0.5,0.0]]}})");
}

MechanicalSystem pendulum1d() {
    return MechanicalSystem::from_json_text(
        R"({"dim":1,"metric":{"type":"identity"},
            "potential":{"fourier":[[1,1.0,0.0],[0,-1.0,0.0]]}})");
}

void BM_SolvePendulum(benchmark::State& state) {
    const auto sys = pendulum1d();
    const TorusGrid grid(1, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto [u, rep] = solve_alpha_u(sys, Vec(0.0), grid, {});
        benchmark::DoNotOptimize(rep.alpha);
    }
}
BENCHMARK(BM_SolvePendulum)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SolveSeparable2D(benchmark::State& state) {
    const auto sys = separable2d();
    const TorusGrid grid(2, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto [u, rep] = solve_alpha_u(sys, Vec(0.0, 0.8), grid, {});
        benchmark::DoNotOptimize(rep.alpha);
    }
}
BENCHMARK(BM_SolveSeparable2D)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
