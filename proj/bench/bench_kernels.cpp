// Serial reference kernels vs. their OpenMP versions. The Arg is the thread
// count for the parallel variants.

#include "outperform/backtest.hpp"
#include "outperform/closed_form.hpp"
#include "outperform/jump_sim.hpp"
#include "outperform/reference.hpp"
#include "outperform/training.hpp"

#include <benchmark/benchmark.h>

using namespace outperform;

namespace {

constexpr std::size_t n_paths = 2000;

simulation_options sim_options()
{
    simulation_options o;
    o.n_scenarios = n_paths;
    o.seed = 1;
    return o;
}

const scenario_set& paths()
{
    static const scenario_set set = simulate_paths(calibrated_inflation_market(), sim_options());
    return set;
}

cd_closed_form control()
{
    return cd_closed_form(closed_form_context::from_market(calibrated_inflation_market(), 0.01, 10, 10, 0.7, 0, 1.3));
}

void simulate_serial(benchmark::State& state)
{
    const auto m = calibrated_inflation_market();
    for (auto _ : state) benchmark::DoNotOptimize(reference::simulate_returns(m, sim_options()));
}

void simulate_parallel(benchmark::State& state)
{
    const auto m = calibrated_inflation_market();
    auto o = sim_options();
    o.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(m, o));
}

void evaluate_serial(benchmark::State& state)
{
    const investment_scenario s;
    const auto cf = control();
    for (auto _ : state) benchmark::DoNotOptimize(reference::evaluate_strategy(clipped_policy(cf), s, paths()));
}

void evaluate_parallel(benchmark::State& state)
{
    const investment_scenario s;
    const auto cf = control();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_strategy(clipped_policy(cf), s, paths(), threads));
}

struct gradient_fixture {
    investment_scenario s;
    lfnn net{lfnn_config{}};
    std::vector<double> theta = initial_theta(lfnn_config{}, 2).values;
    std::vector<std::size_t> batch = minibatch_indices(3, 1, n_paths, 1000);
};

void gradient_serial(benchmark::State& state)
{
    const gradient_fixture f;
    scenario_set sub(f.batch.size(), paths().n_periods, paths().n_assets);
    for (std::size_t k = 0; k < f.batch.size(); ++k) {
        const auto src = paths().path(f.batch[k]);
        std::copy(src.begin(), src.end(), sub.path(k).begin());
    }
    for (auto _ : state) benchmark::DoNotOptimize(reference::loss_gradient(f.net, f.theta, sub, f.s, objective_spec{}));
}

void gradient_parallel(benchmark::State& state)
{
    const gradient_fixture f;
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(loss_gradient(f.net, f.theta, paths(), f.s, objective_spec{}, f.batch, threads));
}

} // namespace

BENCHMARK(simulate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(simulate_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(evaluate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(evaluate_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(gradient_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(gradient_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
