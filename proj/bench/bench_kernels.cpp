#include "phmg/kernels.hpp"
#include "phmg/scenario.hpp"

#include <benchmark/benchmark.h>

using namespace phmg;

namespace {

const NetworkModel& feeder_model() {
    static const Scenario sc = load_scenario("cigre-feeder1");
    static const NetworkModel m(sc.graph, ModelConfig::from_graph(*sc.graph, ActiveSet::all(*sc.graph)));
    return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_Derivative(benchmark::State& st) {
    const NetworkModel& m = feeder_model();
    const Vec x = m.default_initial_state();
    Vec dx;
    for (auto _ : st) {
        m.derivative(x, dx, exec_of(st));
        benchmark::DoNotOptimize(dx.data());
    }
}

void BM_Jacobian(benchmark::State& st) {
    const NetworkModel& m = feeder_model();
    const FieldFn f = [&m](const Vec& x, Vec& out) { m.derivative(x, out); };
    const Vec x = m.default_initial_state();
    for (auto _ : st) {
        Mat J = fd_jacobian(f, x, m.free_states(), m.state_scales(), 1e-7, exec_of(st));
        benchmark::DoNotOptimize(J.data());
    }
}

void BM_Probe(benchmark::State& st) {
    const LoadModel l{ZipParams{75e-6, 75e-6, 0.3, 0.3, 6000.0, 6000.0}};
    const AmplitudeRange r{10000.0, 30000.0};
    for (auto _ : st) {
        const ProbeSummary s = st.range(0) == 0 ? probe_pairs_serial(l, r, 100000, 1) : probe_pairs_parallel(l, r, 100000, 1);
        benchmark::DoNotOptimize(s.min_value);
    }
}

}  // namespace

BENCHMARK(BM_Derivative)->Arg(0)->Arg(1)->ArgName("parallel");
BENCHMARK(BM_Jacobian)->Arg(0)->Arg(1)->ArgName("parallel");
BENCHMARK(BM_Probe)->Arg(0)->Arg(1)->ArgName("parallel");

BENCHMARK_MAIN();
