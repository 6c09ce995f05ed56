#pragma once

// Single-threaded versions of the parallel kernels. They run the same
// per-path primitives in a plain loop and are what the parallel kernels are
// checked against (bitwise) in the tests and benchmarks.

#include "outperform/backtest.hpp"
#include "outperform/bootstrap.hpp"
#include "outperform/jump_sim.hpp"
#include "outperform/training.hpp"

#include <vector>

namespace outperform::reference {

std::vector<double> simulate_returns(const jump_diffusion_params& params, const simulation_options& options);

std::vector<double> bootstrap_returns(const return_table& table, const bootstrap_options& options);

trajectory_set evaluate_strategy(const policy_factory& make_policy, const investment_scenario& scenario,
                                 const scenario_set& scenarios);

loss_and_gradient loss_gradient(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                                const investment_scenario& scenario, const objective_spec& spec);

} // namespace outperform::reference
