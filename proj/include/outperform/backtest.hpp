#pragma once

#include "outperform/closed_form.hpp"
#include "outperform/lfnn.hpp"
#include "outperform/scenario_set.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace outperform {

struct investment_scenario {
    double T = 10.0;
    double dt = 1.0 / 12.0;
    double w0 = 100.0;
    double annual_injection = 10.0; // split evenly over rebalancing periods
    std::vector<double> benchmark_weights{0.7, 0.3};
    double p_max = 1.3;
    double borrow_premium = 0.0; // 1/yr on short notional
    std::size_t n_long = 1;      // assets [0, n_long) are long-only

    std::size_t n_assets() const { return benchmark_weights.size(); }
    std::size_t n_periods() const;
    double injection_per_period() const { return annual_injection * dt; }
    double premium_per_period() const { return borrow_premium * dt; }
    double time(std::size_t j) const { return static_cast<double>(j) * dt; }

    void validate() const;
};

/// W (1 + sum_i p_i r_i) + c, where shortable assets held short also pay the
/// premium on their notional.
double step_wealth(double w, std::span<const double> p, std::span<const double> r, double c_period,
                   double premium_per_period, std::size_t n_long);

/// One path. `wealth` and `benchmark` hold post-injection values at
/// t_0..t_N; `allocations` holds the allocation chosen at t_0..t_{N-1}.
struct trajectory {
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<double> benchmark;
    std::vector<double> allocations;
    bool insolvent = false;
    std::size_t first_insolvent = std::numeric_limits<std::size_t>::max();
};

/// Control at (t, W, W_hat) written to `p`.
using policy_fn = std::function<void(double t, double w, double w_hat, std::span<double> p)>;
/// Produces an independent policy instance; used once per worker so that
/// policies may own scratch space.
using policy_factory = std::function<policy_fn()>;

policy_factory benchmark_policy(const investment_scenario& scenario);
policy_factory clipped_policy(const cd_closed_form& control);
policy_factory lfnn_policy(const lfnn& net, const policy_theta& theta);

trajectory run_benchmark(const investment_scenario& scenario, std::span<const double> path);

/// Drives the active portfolio with `policy` and the benchmark alongside.
/// Once W < 0 at a rebalance date the allocation is the first shortable asset
/// for the rest of the horizon.
trajectory run_policy(const policy_fn& policy, const investment_scenario& scenario, std::span<const double> path);

/// All paths of one strategy, stored path-major.
struct trajectory_set {
    std::size_t n_paths = 0;
    std::size_t n_dates = 0; // N + 1
    std::size_t n_assets = 0;
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<double> benchmark;
    std::vector<double> allocations; // n_paths x N x n_assets
    std::vector<unsigned char> insolvent;

    double W(std::size_t path, std::size_t j) const { return wealth[path * n_dates + j]; }
    double W_hat(std::size_t path, std::size_t j) const { return benchmark[path * n_dates + j]; }
    double allocation(std::size_t path, std::size_t j, std::size_t asset) const
    {
        return allocations[(path * (n_dates - 1) + j) * n_assets + asset];
    }
    std::size_t insolvent_count() const;
};

/// Parallel over paths; each path writes only its own slots.
trajectory_set evaluate_strategy(const policy_factory& make_policy, const investment_scenario& scenario,
                                 const scenario_set& scenarios, int threads = 0);

} // namespace outperform
