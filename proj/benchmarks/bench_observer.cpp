#include <benchmark/benchmark.h>

#include "ipgobs/assumptions.hpp"
#include "ipgobs/builtin_systems.hpp"
#include "ipgobs/ipg.hpp"
#include "ipgobs/newton.hpp"

namespace {

using namespace ipgobs;

Vector planar_x0() {
    Vector x(2);
    x << 0.8, -0.5;
    return x;
}

void BM_IpgInnerStep(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const ObservabilityWindow window(sys, 2);
    const Vector Y = window.evaluate(planar_x0());
    IpgState s;
    s.w = planar_x0() + Vector::Constant(2, 0.1);
    s.K = 0.75 * Matrix::Identity(2, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ipg_inner_step(s, Y, window, 0.1, 1.0, 0.0));
    }
}
BENCHMARK(BM_IpgInnerStep);

void BM_NewtonInnerStep(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const ObservabilityWindow window(sys, 2);
    const Vector Y = window.evaluate(planar_x0());
    const Vector w = planar_x0() + Vector::Constant(2, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(newton_inner_step(w, Y, window));
    }
}
BENCHMARK(BM_NewtonInnerStep);

void BM_IpgRun(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const auto truth = simulate(sys, planar_x0(), {}, static_cast<int>(state.range(0)) - 1);
    IpgConfig config;
    config.d = static_cast<int>(state.range(1));
    config.alpha = ConstantAlpha{0.1};
    config.w_init = truth.states[0] + Vector::Constant(2, 0.1);
    config.K_init = 0.75 * Matrix::Identity(2, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_ipg_observer(sys, 2, truth.outputs, {}, config, &truth));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IpgRun)->Args({40, 1})->Args({40, 10})->Args({200, 10});

void BM_ObservabilityJacobian(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const ObservabilityWindow window(sys, 2);
    const Vector x = planar_x0();
    for (auto _ : state) {
        benchmark::DoNotOptimize(window.jacobian(x));
    }
}
BENCHMARK(BM_ObservabilityJacobian);

void BM_FiniteDifferenceJacobian(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const ObservabilityWindow window(sys, 2);
    const Vector x = planar_x0();
    const VectorFn H = [&](const Vector& z) { return window.evaluate(z); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(fd_jacobian(H, x, default_fd_step(x)));
    }
}
BENCHMARK(BM_FiniteDifferenceJacobian);

void BM_EstimateConstants(benchmark::State& state) {
    const auto sys = builtin_system("planar_mild_nonlinear");
    const ObservabilityWindow window(sys, 2);
    Region region{Vector::Constant(2, -1.5), Vector::Constant(2, 1.5), static_cast<int>(state.range(0)), 7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_constants(window, region));
    }
}
BENCHMARK(BM_EstimateConstants)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
