#include "jumpgreeks/experiment.hpp"
#include "jumpgreeks/greeks.hpp"
#include "jumpgreeks/jump_sde.hpp"
#include "jumpgreeks/rng.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace jumpgreeks;

namespace {

std::vector<JumpPath> paths_with(std::size_t n, std::size_t count)
{
    std::vector<JumpPath> out;
    std::uint64_t k = 0;
    while (out.size() < count) {
        Stream s = make_stream(99, k++);
        JumpPath p = sample_path(n / 5.0, 5.0, NoiseSpec::standard_normal(), s);
        if (p.size() == n) {
            out.push_back(std::move(p));
        }
    }
    return out;
}

DeltaProblem vasicek()
{
    DeltaProblem p;
    p.model = ModelSpec::vasicek(0.1, 10.0, 25.0);
    return p;
}

// sine-modulated jump size, drift integrated numerically
DeltaProblem custom()
{
    auto jump = [](double t, double a, double x) {
        const double s = std::sin(1.3 * t + x / 50.0);
        const double c = std::cos(1.3 * t + x / 50.0);
        JumpPartials j;
        j.value = 20.0 * a * (1.0 + 0.3 * s);
        j.dt = 20.0 * a * 0.39 * c;
        j.da = 20.0 * (1.0 + 0.3 * s);
        j.dx = 20.0 * a * 0.3 * c / 50.0;
        j.dtt = -20.0 * a * 0.3 * 1.69 * s;
        j.dta = 20.0 * 0.39 * c;
        j.dtx = -20.0 * a * 0.39 * s / 50.0;
        j.dax = 20.0 * 0.3 * c / 50.0;
        j.dxx = -20.0 * a * 0.3 * s / 2500.0;
        return j;
    };
    auto drift = [](double, double x) {
        DriftPartials d;
        d.value = 0.1 * (10.0 - x) + 0.5 * std::sin(x / 20.0);
        d.dx = -0.1 + 0.025 * std::cos(x / 20.0);
        d.dxx = -0.00125 * std::sin(x / 20.0);
        return d;
    };
    DeltaProblem p;
    p.model = ModelSpec::custom(jump, drift);
    return p;
}

void weight_bench(benchmark::State& state, const DeltaProblem& problem, Method method, bool closed)
{
    const auto paths = paths_with(static_cast<std::size_t>(state.range(0)), 64);
    std::size_t i = 0;
    for (auto _ : state) {
        const JumpPath& p = paths[i++ % paths.size()];
        benchmark::DoNotOptimize(closed ? path_weight(problem, p, method) : engine_weight(problem, p, method));
    }
}

void BM_closed_aj(benchmark::State& s) { weight_bench(s, vasicek(), Method::aj, true); }
void BM_closed_jt(benchmark::State& s) { weight_bench(s, vasicek(), Method::jt, true); }
void BM_engine_aj(benchmark::State& s) { weight_bench(s, vasicek(), Method::aj, false); }
void BM_engine_jt(benchmark::State& s) { weight_bench(s, vasicek(), Method::jt, false); }
void BM_engine_mixed(benchmark::State& s) { weight_bench(s, vasicek(), Method::mixed, false); }
void BM_custom_aj(benchmark::State& s) { weight_bench(s, custom(), Method::aj, false); }

void BM_solve_custom(benchmark::State& state)
{
    const DeltaProblem p = custom();
    const auto paths = paths_with(static_cast<std::size_t>(state.range(0)), 64);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_path(p.model, p.x0, paths[i++ % paths.size()], 5.0));
    }
}

void BM_estimator(benchmark::State& state)
{
    const ExperimentConfig cfg = table_preset(1);
    const DeltaProblem p = make_problem(cfg, 25.0);
    const PayoffSpec pay = make_payoff(cfg, 25.0);
    const auto method = static_cast<Method>(state.range(0));
    const std::size_t n = 20000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(delta_malliavin(p, pay, method, n, 5));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.SetLabel(std::string(method_name(method)));
}

} // namespace

BENCHMARK(BM_closed_aj)->Arg(1)->Arg(5)->Arg(20);
BENCHMARK(BM_closed_jt)->Arg(5)->Arg(20);
BENCHMARK(BM_engine_aj)->Arg(1)->Arg(5)->Arg(20);
BENCHMARK(BM_engine_jt)->Arg(5)->Arg(20);
BENCHMARK(BM_engine_mixed)->Arg(5)->Arg(20);
BENCHMARK(BM_custom_aj)->Arg(5);
BENCHMARK(BM_solve_custom)->Arg(5);
BENCHMARK(BM_estimator)
    ->Arg(static_cast<int>(Method::aj))
    ->Arg(static_cast<int>(Method::jt))
    ->Arg(static_cast<int>(Method::mixed))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
