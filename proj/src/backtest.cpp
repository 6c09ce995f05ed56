#include "outperform/backtest.hpp"

#include "outperform/error.hpp"
#include "outperform/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace outperform {

std::size_t investment_scenario::n_periods() const
{
    const double n = T / dt;
    const double rounded = std::round(n);
    if (!(dt > 0.0) || !(T > 0.0) || std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0)
        throw invalid_argument("investment scenario: T / dt must be a positive integer");
    return static_cast<std::size_t>(rounded);
}

void investment_scenario::validate() const
{
    (void)n_periods();
    if (!(w0 > 0.0)) throw invalid_argument("investment scenario: w0 must be positive");
    if (benchmark_weights.empty()) throw invalid_argument("investment scenario: benchmark weights are empty");
    double sum = 0.0;
    for (double w : benchmark_weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-12) throw invalid_argument("investment scenario: benchmark weights must sum to 1");
    if (!(n_long >= 1 && n_long < n_assets()))
        throw invalid_argument("investment scenario: need 1 <= n_long < number of assets");
    if (!(p_max >= 1.0)) throw invalid_argument("investment scenario: p_max must be >= 1");
    if (!(borrow_premium >= 0.0)) throw invalid_argument("investment scenario: borrow premium must be >= 0");
}

double step_wealth(double w, std::span<const double> p, std::span<const double> r, double c_period,
                   double premium_per_period, std::size_t n_long)
{
    double growth = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double ri = r[i];
        if (i >= n_long && p[i] < 0.0) ri += premium_per_period;
        growth += p[i] * ri;
    }
    return w * (1.0 + growth) + c_period;
}

policy_factory benchmark_policy(const investment_scenario& scenario)
{
    return [weights = scenario.benchmark_weights]() -> policy_fn {
        return [weights](double, double, double, std::span<double> p) {
            std::copy(weights.begin(), weights.end(), p.begin());
        };
    };
}

policy_factory clipped_policy(const cd_closed_form& control)
{
    return [control]() -> policy_fn {
        return [control](double t, double w, double w_hat, std::span<double> p) {
            const double stock = control.clipped_control(t, w, w_hat);
            p[0] = stock;
            p[1] = 1.0 - stock;
        };
    };
}

policy_factory lfnn_policy(const lfnn& net, const policy_theta& theta)
{
    theta.validate();
    if (!(theta.arch == net.config())) throw invalid_argument("lfnn policy: theta architecture does not match network");
    return [net, values = theta.values]() -> policy_fn {
        auto ws = std::make_shared<lfnn_workspace>(net.make_workspace());
        return [net, values, ws](double t, double w, double w_hat, std::span<double> p) {
            net.allocate(values, t, w, w_hat, p, *ws);
        };
    };
}

trajectory run_benchmark(const investment_scenario& scenario, std::span<const double> path)
{
    const auto make = benchmark_policy(scenario);
    return run_policy(make(), scenario, path);
}

namespace {

// Shared kernel of run_policy and evaluate_strategy.
void drive_path(const policy_fn& policy, const investment_scenario& scenario, std::span<const double> path,
                std::span<double> wealth, std::span<double> benchmark, std::span<double> allocations,
                bool& insolvent, std::size_t& first_insolvent)
{
    const std::size_t n = scenario.n_periods();
    const std::size_t na = scenario.n_assets();
    const double c = scenario.injection_per_period();
    const double premium = scenario.premium_per_period();
    if (path.size() != n * na) throw invalid_argument("returns path does not match the investment scenario");
    double w = scenario.w0;
    double w_hat = scenario.w0;
    wealth[0] = w;
    benchmark[0] = w_hat;
    insolvent = false;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = scenario.time(j);
        auto p = allocations.subspan(j * na, na);
        if (!insolvent && w < 0.0) {
            insolvent = true;
            first_insolvent = j;
        }
        if (insolvent) {
            std::fill(p.begin(), p.end(), 0.0);
            p[scenario.n_long] = 1.0;
        } else {
            policy(t, w, w_hat, p);
            for (std::size_t i = 0; i < na; ++i) {
                if (!std::isfinite(p[i])) {
                    std::ostringstream os;
                    os << "policy returned a non-finite allocation at t=" << t << " (W=" << w << ", W_hat=" << w_hat
                       << ", asset " << i << ")";
                    throw numeric_error(os.str());
                }
            }
        }
        const auto r = path.subspan(j * na, na);
        w = step_wealth(w, p, r, c, premium, scenario.n_long);
        w_hat = step_wealth(w_hat, scenario.benchmark_weights, r, c, 0.0, scenario.n_long);
        wealth[j + 1] = w;
        benchmark[j + 1] = w_hat;
    }
}

} // namespace

trajectory run_policy(const policy_fn& policy, const investment_scenario& scenario, std::span<const double> path)
{
    scenario.validate();
    const std::size_t n = scenario.n_periods();
    trajectory tr;
    tr.times.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) tr.times[j] = scenario.time(j);
    tr.wealth.resize(n + 1);
    tr.benchmark.resize(n + 1);
    tr.allocations.resize(n * scenario.n_assets());
    drive_path(policy, scenario, path, tr.wealth, tr.benchmark, tr.allocations, tr.insolvent, tr.first_insolvent);
    return tr;
}

std::size_t trajectory_set::insolvent_count() const
{
    return static_cast<std::size_t>(std::count(insolvent.begin(), insolvent.end(), 1));
}

trajectory_set evaluate_strategy(const policy_factory& make_policy, const investment_scenario& scenario,
                                 const scenario_set& scenarios, int threads)
{
    scenario.validate();
    const std::size_t n = scenario.n_periods();
    const std::size_t na = scenario.n_assets();
    if (scenarios.n_periods != n || scenarios.n_assets != na)
        throw invalid_argument("scenario set dimensions do not match the investment scenario");
    if (std::abs(scenarios.dt - scenario.dt) > 1e-12)
        throw invalid_argument("scenario set dt does not match the investment scenario");
    trajectory_set out;
    out.n_paths = scenarios.n_scenarios;
    out.n_dates = n + 1;
    out.n_assets = na;
    out.times.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) out.times[j] = scenario.time(j);
    out.wealth.resize(out.n_paths * out.n_dates);
    out.benchmark.resize(out.n_paths * out.n_dates);
    out.allocations.resize(out.n_paths * n * na);
    out.insolvent.assign(out.n_paths, 0);
    parallel::for_each_index(out.n_paths, threads, [&](std::size_t s) {
        thread_local std::size_t unused = 0;
        const auto policy = make_policy();
        bool insolvent = false;
        drive_path(policy, scenario, scenarios.path(s),
                   std::span<double>(out.wealth).subspan(s * out.n_dates, out.n_dates),
                   std::span<double>(out.benchmark).subspan(s * out.n_dates, out.n_dates),
                   std::span<double>(out.allocations).subspan(s * n * na, n * na), insolvent, unused);
        out.insolvent[s] = insolvent ? 1 : 0;
    });
    return out;
}

} // namespace outperform
