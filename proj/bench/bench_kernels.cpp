// Serial reference vs OpenMP kernels. Each pair runs the same work with
// Exec::serial and Exec::parallel; compare the two rows of a pair.

#include <benchmark/benchmark.h>

#include <vector>

#include "abc/generators.hpp"
#include "abc/hydro.hpp"
#include "abc/sparse.hpp"

using namespace abc;

namespace {

const GibbsEnsemble& ensemble12() {
    static const GibbsEnsemble ens = build_ensemble(enumerate(12), 5.0);
    return ens;
}

void assembly(benchmark::State& state, Graph graph, Exec exec) {
    const auto& ens = ensemble12();
    for (auto _ : state) {
        auto g = build_generator(ens, graph, exec);
        benchmark::DoNotOptimize(g.rate.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ens.size()));
}

void symmetric_spmv(benchmark::State& state, Exec exec) {
    static const SymmetricOperator s = symmetrize(build_complete_generator(ensemble12()));
    std::vector<double> x(s.dim, 1.0), y(s.dim);
    for (auto _ : state) {
        spmv(s, x, y, exec);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.col.size()));
}

void hydro(benchmark::State& state, Exec exec) {
    DensityProfile p = perturbed_homogeneous(static_cast<std::size_t>(state.range(0)), 1e-3);
    for (auto _ : state) {
        hydro_step(p, 15.0, 1e-4, HydroScheme::semi_implicit, exec);
        benchmark::DoNotOptimize(p.rho[0].data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(assembly, ring_serial, Graph::ring, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assembly, ring_parallel, Graph::ring, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assembly, complete_serial, Graph::complete, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assembly, complete_parallel, Graph::complete, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(symmetric_spmv, serial, Exec::serial);
BENCHMARK_CAPTURE(symmetric_spmv, parallel, Exec::parallel);
BENCHMARK_CAPTURE(hydro, serial, Exec::serial)->Arg(1024)->Arg(16384);
BENCHMARK_CAPTURE(hydro, parallel, Exec::parallel)->Arg(1024)->Arg(16384);

BENCHMARK_MAIN();
