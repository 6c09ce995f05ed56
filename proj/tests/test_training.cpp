#include "outperform/error.hpp"
#include "outperform/jump_sim.hpp"
#include "outperform/training.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

using namespace outperform;

namespace {

investment_scenario short_horizon(std::size_t n_assets)
{
    investment_scenario s;
    s.T = 2.0;
    s.dt = 0.25;
    s.annual_injection = 10.0;
    if (n_assets == 3) s.benchmark_weights = {0.5, 0.2, 0.3};
    return s;
}

scenario_set small_set(std::size_t n_assets, std::size_t n, std::uint64_t seed)
{
    simulation_options o;
    o.dt = 0.25;
    o.n_periods = 8;
    o.n_scenarios = n;
    o.seed = seed;
    if (n_assets == 2) return simulate_paths(calibrated_inflation_market(), o);
    // The jump model is two-asset only; draw plain normal returns instead.
    test_util::gen g(seed);
    scenario_set set(n, 8, n_assets);
    set.dt = 0.25;
    for (std::size_t i = 0; i < set.returns.size(); ++i)
        set.returns[i] = 0.01 + g.normal(i % n_assets == n_assets - 1 ? 0.005 : 0.08);
    return set;
}

lfnn_config arch_for(const investment_scenario& s, std::size_t n_long, std::vector<std::size_t> hidden)
{
    lfnn_config c;
    c.n_assets = s.n_assets();
    c.n_long = n_long;
    c.hidden = std::move(hidden);
    c.horizon = s.T;
    c.w0 = s.w0;
    return c;
}

// theta with weights large enough that the allocations move around.
std::vector<double> random_theta(const lfnn& net, std::uint64_t seed)
{
    test_util::gen g(seed);
    std::vector<double> theta(net.n_params());
    for (double& v : theta) v = g.uniform(-1.5, 1.5);
    return theta;
}

double max_gradient_error(const lfnn& net, const std::vector<double>& theta, const scenario_set& set,
                          const investment_scenario& s, const objective_spec& spec)
{
    const auto lg = loss_gradient(net, theta, set, s, spec, {}, 1);
    double gnorm = 0.0;
    for (double v : lg.gradient) gnorm = std::max(gnorm, std::abs(v));
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        auto up = theta;
        auto dn = theta;
        up[i] += h;
        dn[i] -= h;
        const double fd = (empirical_loss(net, up, set, s, spec, {}, 1) - empirical_loss(net, dn, set, s, spec, {}, 1)) /
                          (2.0 * h);
        const double denom = std::max(std::abs(lg.gradient[i]), 1e-3 * gnorm);
        worst = std::max(worst, std::abs(fd - lg.gradient[i]) / denom);
    }
    return worst;
}

} // namespace

TEST_SUITE("training")
{
    TEST_CASE("path objective examples")
    {
        objective_spec cd;
        cd.beta = 0.0;
        cd.weighting = objective_weighting::unit;
        auto cs = cd;
        cs.kind = objective_kind::cs;
        cs.epsilon = 0.0;
        const std::vector<double> t{0.0, 1.0, 2.0};
        const std::vector<double> bench{100.0, 100.0, 100.0};
        const std::vector<double> w{100.0, 99.0, 102.0};
        CHECK(path_objective(t, w, bench, cd, 1.0) == 5.0);
        CHECK(path_objective(t, w, bench, cs, 1.0) == 1.0);

        cd.weighting = objective_weighting::dt;
        CHECK(path_objective(t, w, bench, cd, 0.5) == 2.5);

        cd.beta = 0.03;
        std::vector<double> tracked(3);
        for (std::size_t j = 0; j < 3; ++j) tracked[j] = std::exp(0.03 * t[j]) * bench[j];
        CHECK(path_objective(t, tracked, bench, cd, 1.0) == doctest::Approx(0.0).epsilon(1e-20));

        cs.epsilon = 1e-4;
        const std::vector<double> ahead{100.0, 105.0, 120.0};
        CHECK(path_objective(t, ahead, bench, cs, 1.0) == doctest::Approx(1e-4 * 120.0));
    }

    TEST_CASE("CS never exceeds CD when epsilon is zero")
    {
        test_util::gen g(41);
        objective_spec cd;
        cd.beta = 0.02;
        auto cs = cd;
        cs.kind = objective_kind::cs;
        cs.epsilon = 0.0;
        for (int rep = 0; rep < 500; ++rep) {
            const std::size_t n = 2 + g.index(30);
            std::vector<double> t(n), w(n), b(n);
            for (std::size_t j = 0; j < n; ++j) {
                t[j] = 0.1 * static_cast<double>(j);
                b[j] = g.uniform(50, 150);
                w[j] = b[j] + g.normal(20.0);
            }
            CHECK(path_objective(t, w, b, cs, 0.1) <= path_objective(t, w, b, cd, 0.1));
        }
    }

    TEST_CASE("objective spec parsing")
    {
        CHECK(objective_kind_from_string("CS") == objective_kind::cs);
        CHECK(to_string(objective_weighting::unit) == "unit");
        CHECK_THROWS_AS(objective_kind_from_string("mv"), invalid_argument);
        objective_spec s;
        s.epsilon = -1.0;
        CHECK_THROWS_AS(s.validate(), invalid_argument);
    }

    TEST_CASE("empirical loss is a mean over paths")
    {
        const auto s = short_horizon(2);
        const auto set = small_set(2, 6, 3);
        const lfnn net(arch_for(s, 1, {4}));
        const auto theta = random_theta(net, 5);
        objective_spec spec;

        double sum = 0.0;
        for (std::size_t k = 0; k < set.n_scenarios; ++k) {
            const std::vector<std::size_t> one{k};
            sum += empirical_loss(net, theta, set, s, spec, one);
        }
        CHECK(empirical_loss(net, theta, set, s, spec) == doctest::Approx(sum / 6.0).epsilon(1e-14));

        std::vector<std::size_t> twice;
        for (std::size_t k = 0; k < set.n_scenarios; ++k) {
            twice.push_back(k);
            twice.push_back(k);
        }
        CHECK(empirical_loss(net, theta, set, s, spec, twice) ==
              doctest::Approx(empirical_loss(net, theta, set, s, spec)).epsilon(1e-14));

        const std::vector<double> wrong(net.n_params() + 1, 0.0);
        CHECK_THROWS_AS(empirical_loss(net, wrong, set, s, spec), invalid_argument);
    }

    TEST_CASE("loss_gradient matches central differences")
    {
        struct layout {
            std::size_t n_assets;
            std::size_t n_long;
            std::vector<std::size_t> hidden;
        };
        const std::vector<layout> layouts{
            {2, 1, {1}}, {2, 1, {3}}, {2, 1, {10}}, {3, 2, {3}}, {3, 1, {3}}, {2, 1, {4, 3}},
        };
        std::uint64_t seed = 100;
        for (const auto& l : layouts) {
            for (auto kind : {objective_kind::cd, objective_kind::cs}) {
                for (double premium : {0.0, 0.03}) {
                    auto s = short_horizon(l.n_assets);
                    s.n_long = l.n_long;
                    s.borrow_premium = premium;
                    const auto set = small_set(l.n_assets, 10, ++seed);
                    const lfnn net(arch_for(s, l.n_long, l.hidden));
                    const auto theta = random_theta(net, ++seed);
                    objective_spec spec;
                    spec.kind = kind;
                    spec.epsilon = 0.05;
                    CAPTURE(l.hidden.size());
                    CAPTURE(l.hidden.front());
                    CAPTURE(l.n_assets);
                    CAPTURE(premium);
                    CHECK(max_gradient_error(net, theta, set, s, spec) <= 1e-5);
                }
            }
        }
    }

    TEST_CASE("loss and gradient are consistent with empirical_loss")
    {
        const auto s = short_horizon(2);
        const auto set = small_set(2, 20, 9);
        const lfnn net(arch_for(s, 1, {10}));
        const auto theta = random_theta(net, 10);
        objective_spec spec;
        const auto lg = loss_gradient(net, theta, set, s, spec);
        CHECK(lg.loss == doctest::Approx(empirical_loss(net, theta, set, s, spec)).epsilon(1e-13));
    }

    TEST_CASE("gradient is linear in the scenario mixture")
    {
        const auto s = short_horizon(2);
        const auto set = small_set(2, 20, 11);
        const lfnn net(arch_for(s, 1, {3}));
        const auto theta = random_theta(net, 12);
        objective_spec spec;
        std::vector<std::size_t> a, b, all;
        for (std::size_t k = 0; k < 20; ++k) (k < 10 ? a : b).push_back(k);
        const auto ga = loss_gradient(net, theta, set, s, spec, a);
        const auto gb = loss_gradient(net, theta, set, s, spec, b);
        const auto g = loss_gradient(net, theta, set, s, spec);
        for (std::size_t i = 0; i < theta.size(); ++i)
            CHECK(g.gradient[i] == doctest::Approx(0.5 * (ga.gradient[i] + gb.gradient[i])).epsilon(1e-12));
    }

    TEST_CASE("gradient vanishes where the shortfall objective is flat")
    {
        auto s = short_horizon(2);
        scenario_set set(5, 8, 2);
        set.dt = 0.25;
        for (std::size_t k = 0; k < 5; ++k)
            for (std::size_t j = 0; j < 8; ++j) {
                set.returns[(k * 8 + j) * 2] = 0.02 + 0.001 * static_cast<double>(k);
                set.returns[(k * 8 + j) * 2 + 1] = 0.01;
            }
        const lfnn net(arch_for(s, 1, {3}));
        const auto theta = random_theta(net, 13);
        objective_spec spec;
        spec.kind = objective_kind::cs;
        spec.epsilon = 0.0;
        spec.beta = -5.0;
        const auto lg = loss_gradient(net, theta, set, s, spec);
        CHECK(lg.loss == 0.0);
        for (double v : lg.gradient) CHECK(v == 0.0);
    }

    TEST_CASE("non-finite gradients name the scenario")
    {
        auto s = short_horizon(2);
        auto set = small_set(2, 4, 14);
        set.returns[2 * 16 + 4] = std::numeric_limits<double>::infinity();
        const lfnn net(arch_for(s, 1, {3}));
        const auto theta = random_theta(net, 15);
        CHECK_THROWS_WITH_AS(loss_gradient(net, theta, set, s, objective_spec{}), doctest::Contains("scenario 2"),
                             numeric_error);
    }

    TEST_CASE("adam converges on a quadratic")
    {
        test_util::gen g(16);
        std::vector<double> target(6), curvature(6);
        for (std::size_t i = 0; i < 6; ++i) {
            target[i] = g.uniform(-2, 2);
            curvature[i] = g.uniform(0.5, 5);
        }
        const auto f = [&](std::span<const double> x, std::span<double> grad) {
            double v = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - target[i];
                v += curvature[i] * d * d;
                grad[i] = 2.0 * curvature[i] * d;
            }
            return v;
        };
        adam_options o;
        o.learning_rate = 0.01;
        const auto x = adam_minimize(f, std::vector<double>(6, 0.0), o, 20000);
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(x[i] - target[i]) <= 1e-6);

        adam_options bad;
        bad.beta1 = 1.0;
        CHECK_THROWS_AS(bad.validate(), invalid_argument);
    }

    TEST_CASE("minibatches are deterministic per iteration")
    {
        const auto a = minibatch_indices(7, 3, 100, 50);
        CHECK(a == minibatch_indices(7, 3, 100, 50));
        CHECK(a != minibatch_indices(7, 4, 100, 50));
        CHECK(a != minibatch_indices(8, 3, 100, 50));
        for (auto i : a) CHECK(i < 100);
    }

    TEST_CASE("training is seeded, thread independent and keeps the best iterate")
    {
        const auto s = short_horizon(2);
        const auto set = small_set(2, 60, 17);
        const auto init = initial_theta(arch_for(s, 1, {5}), 18);
        train_config c;
        c.iterations = 40;
        c.batch_size = 20;
        c.eval_every = 10;
        c.seed = 19;
        c.adam.learning_rate = 0.05;
        c.threads = 1;
        const auto a = train(init, set, s, objective_spec{}, c);
        c.threads = 3;
        const auto b = train(init, set, s, objective_spec{}, c);
        CHECK(a.theta.values == b.theta.values);
        CHECK(a.history.batch_loss == b.history.batch_loss);

        REQUIRE(a.history.evaluations.size() == 5);
        CHECK(a.history.batch_loss.size() == 40);
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> best_so_far;
        for (const auto& e : a.history.evaluations) {
            best = std::min(best, e.loss);
            best_so_far.push_back(best);
        }
        CHECK(std::is_sorted(best_so_far.rbegin(), best_so_far.rend()));
        CHECK(a.best_loss == best);
        CHECK(a.best_loss < a.history.evaluations.front().loss);
        const lfnn net(init.arch);
        CHECK(empirical_loss(net, a.theta.values, set, s, objective_spec{}) == a.best_loss);

        c.batch_size = 61;
        CHECK_THROWS_AS(train(init, set, s, objective_spec{}, c), invalid_argument);
    }

    TEST_CASE("a poisoned scenario aborts training")
    {
        const auto s = short_horizon(2);
        auto set = small_set(2, 10, 20);
        set.returns[5] = std::numeric_limits<double>::quiet_NaN();
        const auto init = initial_theta(arch_for(s, 1, {3}), 21);
        train_config c;
        c.iterations = 5;
        c.batch_size = 10;
        CHECK_THROWS_AS(train(init, set, s, objective_spec{}, c), numeric_error);
    }

    TEST_CASE("loss history csv")
    {
        train_history h;
        h.batch_loss = {3.0, 2.0};
        h.evaluations = {{0, 4.0}, {2, 1.5}};
        const auto p = test_util::tmp_dir("training") / "loss.csv";
        write_loss_history(p, h);
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        CHECK(line == "iteration,batch_loss,full_loss");
        std::vector<std::string> rows;
        while (std::getline(in, line)) rows.push_back(line);
        CHECK(rows.size() == 3);
    }
}
