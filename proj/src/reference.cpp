#include "outperform/reference.hpp"

#include "outperform/rng.hpp"

#include <algorithm>

namespace outperform::reference {

std::vector<double> simulate_returns(const jump_diffusion_params& params, const simulation_options& options)
{
    const auto moments = compute_jump_moments(params);
    const std::size_t stride = options.n_periods * params.assets.size();
    std::vector<double> out(options.n_scenarios * stride);
    for (std::size_t s = 0; s < options.n_scenarios; ++s) {
        auto rng = substream(options.seed, stream_domain::simulation, s);
        simulate_one_path(params, moments, options.dt, options.n_periods, rng,
                          std::span<double>(out).subspan(s * stride, stride));
    }
    return out;
}

std::vector<double> bootstrap_returns(const return_table& table, const bootstrap_options& options)
{
    const std::size_t na = table.n_assets();
    std::vector<double> out;
    out.reserve(options.n_scenarios * options.n_periods * na);
    for (std::size_t s = 0; s < options.n_scenarios; ++s) {
        auto rng = substream(options.seed, stream_domain::bootstrap, s);
        for (std::size_t row : bootstrap_row_indices(rng, table, options)) {
            const auto r = table.row(row);
            out.insert(out.end(), r.begin(), r.end());
        }
    }
    return out;
}

trajectory_set evaluate_strategy(const policy_factory& make_policy, const investment_scenario& scenario,
                                 const scenario_set& scenarios)
{
    const std::size_t n = scenario.n_periods();
    trajectory_set out;
    out.n_paths = scenarios.n_scenarios;
    out.n_dates = n + 1;
    out.n_assets = scenario.n_assets();
    for (std::size_t j = 0; j <= n; ++j) out.times.push_back(scenario.time(j));
    const auto policy = make_policy();
    for (std::size_t s = 0; s < scenarios.n_scenarios; ++s) {
        const auto tr = run_policy(policy, scenario, scenarios.path(s));
        out.wealth.insert(out.wealth.end(), tr.wealth.begin(), tr.wealth.end());
        out.benchmark.insert(out.benchmark.end(), tr.benchmark.begin(), tr.benchmark.end());
        out.allocations.insert(out.allocations.end(), tr.allocations.begin(), tr.allocations.end());
        out.insolvent.push_back(tr.insolvent ? 1 : 0);
    }
    return out;
}

loss_and_gradient loss_gradient(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                                const investment_scenario& scenario, const objective_spec& spec)
{
    const std::size_t np = net.n_params();
    loss_and_gradient out;
    out.gradient.assign(np, 0.0);
    auto ws = net.make_workspace();
    std::vector<double> g(np);
    for (std::size_t s = 0; s < scenarios.n_scenarios; ++s) {
        std::fill(g.begin(), g.end(), 0.0);
        out.loss += path_loss_gradient(net, theta, scenarios.path(s), scenario, spec, g, ws);
        for (std::size_t i = 0; i < np; ++i) out.gradient[i] += g[i];
    }
    const double inv = 1.0 / static_cast<double>(scenarios.n_scenarios);
    out.loss *= inv;
    for (double& v : out.gradient) v *= inv;
    return out;
}

} // namespace outperform::reference
