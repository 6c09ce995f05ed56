#include "outperform/backtest.hpp"
#include "outperform/closed_form.hpp"
#include "outperform/error.hpp"
#include "outperform/jump_sim.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace outperform;

namespace {

investment_scenario yearly(double T, double dt, double injection)
{
    investment_scenario s;
    s.T = T;
    s.dt = dt;
    s.annual_injection = injection;
    return s;
}

std::vector<double> constant_path(std::size_t n, std::vector<double> r)
{
    std::vector<double> out;
    for (std::size_t j = 0; j < n; ++j) out.insert(out.end(), r.begin(), r.end());
    return out;
}

} // namespace

TEST_SUITE("backtest")
{
    TEST_CASE("step_wealth examples")
    {
        CHECK(step_wealth(100, std::vector<double>{1.0}, std::vector<double>{0.1}, 10, 0, 1) == doctest::Approx(120));
        CHECK(step_wealth(100, std::vector<double>{0.7, 0.3}, std::vector<double>{0.1, 0.0}, 0, 0, 1) ==
              doctest::Approx(107));
        CHECK(step_wealth(100, std::vector<double>{1.3, -0.3}, std::vector<double>{0.0, 0.0}, 0, 0.03 / 12, 1) ==
              doctest::Approx(99.925).epsilon(1e-14));
        // Long-only assets never pay the premium, long shortable ones neither.
        CHECK(step_wealth(100, std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 0.0}, 0, 0.01, 1) == 100.0);
    }

    TEST_CASE("scenario validation")
    {
        auto s = yearly(10, 0.3, 0);
        CHECK_THROWS_AS(s.validate(), invalid_argument);
        s = yearly(10, 0.25, 0);
        CHECK(s.n_periods() == 40);
        s.benchmark_weights = {0.6, 0.3};
        CHECK_THROWS_AS(s.validate(), invalid_argument);
        s = yearly(10, 1.0 / 12.0, 0);
        CHECK(s.n_periods() == 120);
        s.w0 = 0.0;
        CHECK_THROWS_AS(s.validate(), invalid_argument);
    }

    TEST_CASE("benchmark in flat and constant markets")
    {
        auto s = yearly(1, 1.0 / 12.0, 0);
        auto tr = run_benchmark(s, constant_path(12, {0.0, 0.0}));
        for (double w : tr.benchmark) CHECK(w == 100.0);

        s = yearly(1, 1.0 / 12.0, 10);
        tr = run_benchmark(s, constant_path(12, {0.0, 0.0}));
        CHECK(tr.benchmark.back() == doctest::Approx(110.0).epsilon(1e-14));
        CHECK(tr.benchmark.front() == 100.0);
        CHECK(tr.wealth == tr.benchmark);

        s = yearly(1, 1.0 / 12.0, 0);
        tr = run_benchmark(s, constant_path(12, {0.01, 0.0}));
        for (std::size_t j = 1; j < tr.benchmark.size(); ++j)
            CHECK(tr.benchmark[j] / tr.benchmark[j - 1] == doctest::Approx(1.007).epsilon(1e-14));
    }

    TEST_CASE("policy equal to the benchmark reproduces it exactly")
    {
        const auto s = yearly(10, 1.0 / 12.0, 10);
        simulation_options o;
        o.n_scenarios = 20;
        const auto set = simulate_paths(calibrated_inflation_market(), o);
        const auto policy = [](double, double, double, std::span<double> p) {
            p[0] = 0.7;
            p[1] = 0.3;
        };
        for (std::size_t k = 0; k < set.n_scenarios; ++k) {
            const auto a = run_policy(policy, s, set.path(k));
            const auto b = run_benchmark(s, set.path(k));
            CHECK(a.wealth == b.benchmark);
            CHECK(a.wealth == a.benchmark);
        }
    }

    TEST_CASE("insolvency switches permanently to the first shortable asset")
    {
        auto s = yearly(1, 0.25, 0);
        // Leveraged stock position, then a crash.
        std::vector<double> path{0.0, 0.0, -0.9, 0.02, 0.3, 0.01, 0.5, 0.01};
        int calls = 0;
        const auto policy = [&](double, double, double, std::span<double> p) {
            ++calls;
            p[0] = 1.3;
            p[1] = -0.3;
        };
        const auto tr = run_policy(policy, s, path);
        REQUIRE(tr.insolvent);
        CHECK(tr.first_insolvent == 2);
        CHECK(calls == 2);
        CHECK(tr.wealth[2] < 0.0);
        for (std::size_t j = 2; j < 4; ++j) {
            CHECK(tr.allocations[j * 2] == 0.0);
            CHECK(tr.allocations[j * 2 + 1] == 1.0);
        }
        // Debt accrues at the bond's return.
        CHECK(tr.wealth[3] == doctest::Approx(tr.wealth[2] * 1.01));
    }

    TEST_CASE("non-finite allocations abort with a diagnostic")
    {
        const auto s = yearly(1, 0.5, 0);
        const auto policy = [](double t, double, double, std::span<double> p) {
            p[0] = t > 0.1 ? std::numeric_limits<double>::quiet_NaN() : 0.5;
            p[1] = 0.5;
        };
        CHECK_THROWS_WITH_AS(run_policy(policy, s, constant_path(2, {0.0, 0.0})), doctest::Contains("t=0.5"),
                             numeric_error);
        CHECK_THROWS_AS(run_policy(policy, s, constant_path(3, {0.0, 0.0})), invalid_argument);
    }

    TEST_CASE("flat markets conserve cash for any feasible policy")
    {
        test_util::gen g(3);
        const auto s = yearly(5, 0.25, 12);
        for (int rep = 0; rep < 100; ++rep) {
            const auto policy = [&](double, double, double, std::span<double> p) {
                p[0] = g.uniform(0.0, 1.3);
                p[1] = 1.0 - p[0];
            };
            const auto tr = run_policy(policy, s, constant_path(20, {0.0, 0.0}));
            CHECK(tr.wealth.back() == doctest::Approx(100.0 + 60.0).epsilon(1e-13));
        }
    }

    TEST_CASE("a positive premium never helps a shorting policy")
    {
        test_util::gen g(4);
        auto s = yearly(10, 1.0 / 12.0, 10);
        simulation_options o;
        o.n_scenarios = 50;
        const auto set = simulate_paths(calibrated_inflation_market(), o);
        const auto policy = [](double t, double, double, std::span<double> p) {
            p[0] = 1.0 + 0.03 * t;
            p[1] = 1.0 - p[0];
        };
        for (std::size_t k = 0; k < set.n_scenarios; ++k) {
            s.borrow_premium = 0.0;
            const auto free = run_policy(policy, s, set.path(k));
            s.borrow_premium = 0.03;
            const auto charged = run_policy(policy, s, set.path(k));
            CHECK(charged.wealth.back() <= free.wealth.back());
            CHECK(charged.wealth.back() < free.wealth.back());
        }
    }

    TEST_CASE("evaluate_strategy matches per-path runs")
    {
        const auto s = yearly(10, 1.0 / 12.0, 10);
        simulation_options o;
        o.n_scenarios = 30;
        const auto market = calibrated_inflation_market();
        const auto set = simulate_paths(market, o);
        const cd_closed_form cf(closed_form_context::from_market(market, 0.01, 10, 10, 0.7, 0.0, 1.3));
        const auto all = evaluate_strategy(clipped_policy(cf), s, set, 2);
        const auto policy = clipped_policy(cf)();
        for (std::size_t k = 0; k < set.n_scenarios; ++k) {
            const auto tr = run_policy(policy, s, set.path(k));
            for (std::size_t j = 0; j < all.n_dates; ++j) {
                CHECK(all.W(k, j) == tr.wealth[j]);
                CHECK(all.W_hat(k, j) == tr.benchmark[j]);
            }
            CHECK(all.allocation(k, 5, 0) == tr.allocations[10]);
        }
        auto other = s;
        other.dt = 0.25;
        CHECK_THROWS_AS(evaluate_strategy(benchmark_policy(other), other, set), invalid_argument);
    }

    TEST_CASE("clipped form never hits insolvency in the calibrated market")
    {
        const auto s = yearly(10, 1.0 / 12.0, 10);
        simulation_options o;
        o.n_scenarios = 10000;
        o.seed = 12;
        const auto market = calibrated_inflation_market();
        const auto set = simulate_paths(market, o);
        const cd_closed_form cf(closed_form_context::from_market(market, 0.01, 10, 10, 0.7, 0.0, 1.3));
        const auto all = evaluate_strategy(clipped_policy(cf), s, set);
        CHECK(all.insolvent_count() == 0);
    }
}
