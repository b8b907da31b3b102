#include <benchmark/benchmark.h>

#include <cmath>

#include "capbound/direct_mi.hpp"
#include "capbound/epi.hpp"
#include "capbound/oracle.hpp"
#include "capbound/volume.hpp"

using namespace capbound;
using namespace capbound::constraints;

namespace {

ConstraintSet smith() {
    return ConstraintSet({CostTerm::power(10.0), CostTerm::peak_well(std::sqrt(20.0))});
}

void BM_QFunction(benchmark::State& state) {
    double u = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(numerics::q_function(u));
        u += 1e-6;
    }
}
BENCHMARK(BM_QFunction);

void BM_LogIntExp_Gaussian(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(numerics::log_int_exp(
            [](double x) { return -0.5 * x * x; }, numerics::Interval::real(), {}));
    }
}
BENCHMARK(BM_LogIntExp_Gaussian);

void BM_VolumeExponent_PowerWell(benchmark::State& state) {
    ConstraintSet cs = smith();
    for (auto _ : state) benchmark::DoNotOptimize(volume::volume_exponent(cs).v);
}
BENCHMARK(BM_VolumeExponent_PowerWell)->Unit(benchmark::kMillisecond);

void BM_EpiPeakPower(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(epi::epi_peak_power(10.0, std::sqrt(20.0), 1.0).value);
}
BENCHMARK(BM_EpiPeakPower);

void BM_DirectBound_Smith10dB(benchmark::State& state) {
    ConstraintSet cs = smith();
    for (auto _ : state) benchmark::DoNotOptimize(direct_mi::direct_bound(cs, 1.0).value);
}
BENCHMARK(BM_DirectBound_Smith10dB)->Unit(benchmark::kMillisecond);

void BM_NystromPsi(benchmark::State& state) {
    ConstraintSet cs({CostTerm::correlation(1, 0.0, Mode::equality), CostTerm::peak_well(1.0)});
    volume::KernelSpec k =
        volume::KernelSpec::from(cs, {{1.0}, {numerics::SignDomain::free_sign}});
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(volume::kernel_psi_nystrom_full(k, n, numerics::inf).psi);
}
BENCHMARK(BM_NystromPsi)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_McVolume(benchmark::State& state) {
    ConstraintSet cs({CostTerm::power(10.0), CostTerm::peak_well(5.0)});
    oracle::McConfig cfg;
    cfg.n = 8;
    cfg.samples = static_cast<std::int64_t>(state.range(0));
    cfg.seed = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(oracle::mc_log_volume(cs, cfg).log_volume_per_dim);
}
BENCHMARK(BM_McVolume)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
