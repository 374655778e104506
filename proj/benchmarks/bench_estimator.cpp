#include <benchmark/benchmark.h>

#include "wkam/semiconcave.hpp"
#include "wkam/weakkam.hpp"

using namespace wkam;

namespace {

void BM_SingularSetPendulum(benchmark::State& state) {
    const auto sys = MechanicalSystem::from_json_text(
        R"({"dim":1,"metric":{"type":"identity"},
            "potential":{"fourier":[[1,1.0,0.0],[0,-1.0,0.0]]}})");
    const TorusGrid grid(1, static_cast<int>(state.range(0)));
    auto [u, rep] = solve_alpha_u(sys, Vec(0.0), grid, {});
    const auto est = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    const double tol = 0.2 * shell_scale(sys, rep.alpha);
    for (auto _ : state) {
        SingularSet s = singular_set(u, est, tol);
        benchmark::DoNotOptimize(s.nodes.data());
    }
}
BENCHMARK(BM_SingularSetPendulum)->Arg(256)->Arg(512);

void BM_SuperdiffQuery(benchmark::State& state) {
    const auto sys = MechanicalSystem::from_json_text(
        R"({"dim":2,"metric":{"type":"identity"},
            "potential":{"fourier":[[1,0,0.5,0.0],[0,0,-0.5,0.0]]}})");
    const TorusGrid grid(2, 64);
    auto [u, rep] = solve_alpha_u(sys, Vec(0.0, 0.8), grid, {});
    const auto est = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    for (auto _ : state) {
        CovectorPolytope p = superdifferential(u, Vec(0.5, 0.25), est);
        benchmark::DoNotOptimize(p.vertices.data());
    }
}
BENCHMARK(BM_SuperdiffQuery);

}  // namespace
