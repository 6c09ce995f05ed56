#include "outperform/closed_form.hpp"
#include "outperform/error.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace outperform;

namespace {

closed_form_context paper_context(double beta = 0.01, double c = 10.0)
{
    return closed_form_context::from_market(calibrated_inflation_market(), beta, c, 10.0, 0.7, 0.0, 1.3);
}

// The textbook quotient forms, valid away from the removable singularities.
double raw_A(double a, double tau)
{
    return (std::exp(a * tau) - 1.0) / a;
}

} // namespace

TEST_SUITE("closed_form")
{
    TEST_CASE("divided differences agree with the raw quotients away from coincidence")
    {
        CHECK(test_util::rel_err(exp_divided_difference(0.3, -0.2, 2.0),
                                 (std::exp(0.6) - std::exp(-0.4)) / 0.5) < 1e-14);
        const double x = 0.3, y = -0.2, z = 0.05, tau = 3.0;
        const double f_xy = (std::exp(x * tau) - std::exp(y * tau)) / (x - y);
        const double f_yz = (std::exp(y * tau) - std::exp(z * tau)) / (y - z);
        CHECK(test_util::rel_err(exp_divided_difference(x, y, z, tau), (f_xy - f_yz) / (x - z)) < 1e-12);
        // Symmetric in its arguments.
        CHECK(exp_divided_difference(x, y, z, tau) == exp_divided_difference(z, x, y, tau));
    }

    TEST_CASE("divided differences are continuous through coincident rates")
    {
        const double tau = 7.0;
        const double base = exp_divided_difference(0.1, 0.1, tau);
        CHECK(base == doctest::Approx(tau * std::exp(0.1 * tau)).epsilon(1e-15));
        for (double d : {1e-3, 1e-5, 1e-7, 1e-9, 1e-12}) {
            const double near = exp_divided_difference(0.1 + d, 0.1, tau);
            CHECK(std::abs(near - base) / base < 2.0 * d * tau);
        }
        const double second = exp_divided_difference(0.1, 0.1, 0.1, tau);
        CHECK(second == doctest::Approx(0.5 * tau * tau * std::exp(0.1 * tau)).epsilon(1e-15));
        for (double d : {1e-4, 1e-7, 1e-10}) {
            const double near = exp_divided_difference(0.1 + d, 0.1, 0.1 - d, tau);
            CHECK(std::abs(near - second) / second < 10.0 * d * tau);
        }
        // A -> T - t when the rate vanishes.
        CHECK(exp_divided_difference(1e-14, 0.0, 4.0) == doctest::Approx(4.0).epsilon(1e-12));
    }

    TEST_CASE("terminal values and degenerate parameters")
    {
        const cd_closed_form cf(paper_context());
        CHECK(cf.A(10.0) == 0.0);
        CHECK(cf.D(10.0) == 0.0);
        CHECK(cf.B(10.0) == 0.0);
        CHECK(cf.g(10.0) == doctest::Approx(std::exp(0.1)));
        CHECK(cf.h(10.0) == 0.0);
        for (double t : {0.0, 2.5, 9.99}) {
            CHECK(cf.B(t, 0.02, 0.0) == 0.0);
            CHECK(cf.h(t, 0.02, 0.0) == 0.0);
            CHECK(cf.g(t, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(test_util::rel_err(cf.A(t), raw_A(cf.rate_a(), 10.0 - t)) < 1e-12);
        }
    }

    TEST_CASE("g and h are -D/(2A) and -B/(2A)")
    {
        const cd_closed_form cf(paper_context());
        for (double t : {0.0, 1.0, 5.0, 9.5}) {
            CHECK(test_util::rel_err(cf.g(t), -cf.D(t) / (2.0 * cf.A(t))) < 1e-13);
            CHECK(test_util::rel_err(cf.h(t), -cf.B(t) / (2.0 * cf.A(t))) < 1e-12);
        }
    }

    TEST_CASE("closed forms match the ODE oracle")
    {
        const auto ctx = paper_context();
        const cd_closed_form cf(ctx);
        test_util::gen g(21);
        for (int i = 0; i < 200; ++i) {
            const double t = g.uniform(0.0, 10.0);
            const double beta = g.uniform(0.0, 0.05);
            const double c = g.uniform(0.0, 20.0);
            const auto o = ode_oracle_at(ctx, t, beta, c, 2000);
            CHECK(test_util::rel_err(cf.A(t), o.A) < 1e-9);
            CHECK(test_util::rel_err(cf.D(t, beta), o.D) < 1e-9);
            if (c > 0.0 && t < 9.999) CHECK(test_util::rel_err(cf.B(t, beta, c), o.B) < 1e-8);
        }
        // beta = 0, c = 0 exercises the degenerate exponents.
        const auto o = ode_oracle_at(ctx, 3.0, 0.0, 0.0, 2000);
        CHECK(test_util::rel_err(cf.D(3.0, 0.0), o.D) < 1e-10);
        CHECK(cf.B(3.0, 0.0, 0.0) == o.B);
    }

    TEST_CASE("ODE oracle converges at fourth order")
    {
        const auto ctx = paper_context(0.03, 10.0);
        const cd_closed_form cf(ctx);
        const double exact = cf.B(0.0);
        const double e1 = std::abs(ode_oracle_at(ctx, 0.0, 0.03, 10.0, 20).B - exact);
        const double e2 = std::abs(ode_oracle_at(ctx, 0.0, 0.03, 10.0, 40).B - exact);
        CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
        const auto table = ode_oracle_table(ctx, 100);
        CHECK(table.size() == 101);
        CHECK(table.front().t == 10.0);
        CHECK(table.back().t == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_THROWS_AS(ode_oracle_table(ctx, 99), invalid_argument);
    }

    TEST_CASE("spot value of the optimal control against an oracle evaluation")
    {
        const auto ctx = paper_context();
        const cd_closed_form cf(ctx);
        const auto o = ode_oracle_at(ctx, 5.0, 0.01, 10.0, 4000);
        const double g = -o.D / (2.0 * o.A);
        const double h = -o.B / (2.0 * o.A);
        const auto& m = ctx.moments;
        const double w = 150.0, w_hat = 140.0;
        const double expected = ((ctx.mu1 - ctx.mu2) / m.gamma * h +
                                 (ctx.mu1 - ctx.mu2 + m.vartheta) / m.gamma * (g * w_hat - w) + g * w_hat * 0.7) /
                                w;
        CHECK(std::abs(cf.optimal_control(5.0, w, w_hat) - expected) < 1e-8);
    }

    TEST_CASE("control decomposition, benchmark identity and contrarian slope")
    {
        const cd_closed_form cf(paper_context(0.01, 0.0));
        const double t = 4.0, w_hat = 180.0;
        const double target = cf.g(t) * w_hat;
        CHECK(cf.optimal_control(t, target, w_hat) == doctest::Approx(0.7).epsilon(1e-14));

        const cd_closed_form cf2(paper_context());
        double prev = std::numeric_limits<double>::infinity();
        for (double w = 20.0; w < 600.0; w += 7.0) {
            const double p = cf2.optimal_control(t, w, w_hat);
            CHECK(p < prev);
            prev = p;
            CHECK(cf2.cash_component(t, w) + cf2.tracking_component(t, w, w_hat) == doctest::Approx(p).epsilon(1e-15));
            CHECK((cf2.tracking_component(t, w, w_hat) >= 0.7) == (w <= cf2.g(t) * w_hat));
        }
        CHECK_THROWS_WITH_AS(cf2.optimal_control(t, 0.0, w_hat), doctest::Contains("undefined control at zero wealth"),
                             invalid_argument);
    }

    TEST_CASE("clipping")
    {
        const cd_closed_form cf(paper_context());
        const double t = 1.0, w_hat = 120.0;
        // Very low wealth pushes p* above p_max, very high wealth below zero.
        CHECK(cf.optimal_control(t, 10.0, w_hat) > 1.3);
        CHECK(cf.clipped_control(t, 10.0, w_hat) == 1.3);
        CHECK(cf.optimal_control(t, 1000.0, w_hat) < 0.0);
        CHECK(cf.clipped_control(t, 1000.0, w_hat) == 0.0);
        const double w_mid = cf.g(t) * w_hat;
        const double p = cf.optimal_control(t, w_mid, w_hat);
        REQUIRE(p > 0.0);
        REQUIRE(p < 1.3);
        CHECK(cf.clipped_control(t, w_mid, w_hat) == p);
    }

    TEST_CASE("drift assumption check")
    {
        CHECK(paper_context().drift_assumption_warning().empty());
        auto p = calibrated_inflation_market();
        std::swap(p.assets[0].mu, p.assets[1].mu);
        const auto ctx = closed_form_context::from_market(p, 0.01, 10.0, 10.0, 0.7, 0.0, 1.3);
        CHECK(ctx.drift_assumption_warning().find("not positive") != std::string::npos);
        CHECK_THROWS_AS(closed_form_context::from_market(p, 0.01, 10.0, -1.0, 0.7, 0.0, 1.3), invalid_argument);
        CHECK_THROWS_AS(closed_form_context::from_market(p, 0.01, 10.0, 10.0, 0.7, 2.0, 1.3), invalid_argument);
    }
}
