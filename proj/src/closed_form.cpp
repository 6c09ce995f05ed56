#include "outperform/closed_form.hpp"

#include "outperform/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace outperform {

namespace {

// Below this |rate difference| * tau the quotients switch to their Taylor form.
constexpr double series_cutoff = 1e-6;

} // namespace

double exp_divided_difference(double x, double y, double tau)
{
    const double d = x - y;
    if (std::abs(d * tau) < series_cutoff) {
        const double m = 0.5 * (x + y);
        const double dt = d * tau;
        return tau * std::exp(m * tau) * (1.0 + dt * dt / 24.0);
    }
    return std::exp(y * tau) * std::expm1(d * tau) / d;
}

double exp_divided_difference(double x, double y, double z, double tau)
{
    double v[3] = {x, y, z};
    std::sort(v, v + 3);
    const double lo = v[0];
    const double mid = v[1];
    const double hi = v[2];
    if ((hi - lo) * tau < series_cutoff) {
        const double m = (lo + mid + hi) / 3.0;
        return 0.5 * tau * tau * std::exp(m * tau);
    }
    // hi and lo are the farthest pair, which bounds the cancellation.
    return (exp_divided_difference(hi, mid, tau) - exp_divided_difference(mid, lo, tau)) / (hi - lo);
}

closed_form_context closed_form_context::from_market(const jump_diffusion_params& market, double beta, double c,
                                                     double T, double varrho_hat, double p_min, double p_max)
{
    if (market.assets.size() != 2) throw invalid_argument("closed form requires exactly two assets");
    closed_form_context ctx;
    ctx.moments = compute_jump_moments(market);
    ctx.mu1 = market.assets[0].mu;
    ctx.mu2 = market.assets[1].mu;
    ctx.beta = beta;
    ctx.c = c;
    ctx.T = T;
    ctx.varrho_hat = varrho_hat;
    ctx.p_min = p_min;
    ctx.p_max = p_max;
    ctx.validate();
    return ctx;
}

std::string closed_form_context::drift_assumption_warning() const
{
    std::ostringstream os;
    if (!(mu1 - mu2 > 0.0)) os << "mu1 - mu2 = " << mu1 - mu2 << " is not positive";
    if (!(mu1 - mu2 + moments.vartheta > 0.0)) {
        if (os.tellp() > 0) os << "; ";
        os << "mu1 - mu2 + vartheta = " << mu1 - mu2 + moments.vartheta << " is not positive";
    }
    return os.str();
}

void closed_form_context::validate() const
{
    if (!(T > 0.0)) throw invalid_argument("closed form: horizon T must be positive");
    if (!(p_min <= p_max)) throw invalid_argument("closed form: p_min must not exceed p_max");
    if (!(moments.gamma > 0.0)) throw invalid_argument("closed form: gamma must be positive");
    if (!(beta >= 0.0)) throw invalid_argument("closed form: beta must be >= 0");
}

cd_closed_form::cd_closed_form(closed_form_context ctx) : ctx_(std::move(ctx))
{
    ctx_.validate();
    a_ = 2.0 * ctx_.mu2 - ctx_.moments.eta;
    b_ = ctx_.mu2 - ctx_.moments.phi;
    k_cash_ = (ctx_.mu1 - ctx_.mu2) / ctx_.moments.gamma;
    k_track_ = (ctx_.mu1 - ctx_.mu2 + ctx_.moments.vartheta) / ctx_.moments.gamma;
}

double cd_closed_form::A(double t) const
{
    return exp_divided_difference(a_, 0.0, ctx_.T - t);
}

double cd_closed_form::D(double t, double beta) const
{
    return -2.0 * std::exp(beta * ctx_.T) * exp_divided_difference(a_, -beta, ctx_.T - t);
}

double cd_closed_form::B(double t, double beta, double c) const
{
    const double tau = ctx_.T - t;
    return 2.0 * c *
           (exp_divided_difference(a_, b_, 0.0, tau) -
            std::exp(beta * ctx_.T) * exp_divided_difference(a_, b_, -beta, tau));
}

double cd_closed_form::g(double t, double beta) const
{
    const double tau = ctx_.T - t;
    if (tau <= 0.0) return std::exp(beta * ctx_.T);
    return std::exp(beta * ctx_.T) * exp_divided_difference(a_, -beta, tau) / exp_divided_difference(a_, 0.0, tau);
}

double cd_closed_form::h(double t, double beta, double c) const
{
    const double tau = ctx_.T - t;
    if (tau <= 0.0) return 0.0;
    const double per_unit_c =
        (std::exp(beta * ctx_.T) * exp_divided_difference(a_, b_, -beta, tau) -
         exp_divided_difference(a_, b_, 0.0, tau)) /
        exp_divided_difference(a_, 0.0, tau);
    return c * per_unit_c;
}

double cd_closed_form::cash_component(double t, double w) const
{
    if (w == 0.0) throw invalid_argument("undefined control at zero wealth");
    return k_cash_ * h(t) / w;
}

double cd_closed_form::tracking_component(double t, double w, double w_hat) const
{
    if (w == 0.0) throw invalid_argument("undefined control at zero wealth");
    const double target = g(t) * w_hat;
    return (k_track_ * (target - w) + target * ctx_.varrho_hat) / w;
}

double cd_closed_form::optimal_control(double t, double w, double w_hat) const
{
    return cash_component(t, w) + tracking_component(t, w, w_hat);
}

double cd_closed_form::clipped_control(double t, double w, double w_hat) const
{
    return std::min(std::max(optimal_control(t, w, w_hat), ctx_.p_min), ctx_.p_max);
}

namespace {

struct ode_rhs {
    double a;
    double b;
    double beta;
    double c;

    abd_values operator()(double t, const abd_values& y) const
    {
        return {
            -a * y.A - 1.0,
            -b * y.B - 2.0 * c * y.A - c * y.D,
            -a * y.D + 2.0 * std::exp(beta * t),
        };
    }
};

abd_values axpy(const abd_values& y, double h, const abd_values& k)
{
    return {y.A + h * k.A, y.B + h * k.B, y.D + h * k.D};
}

abd_values rk4_step(const ode_rhs& f, double t, const abd_values& y, double h)
{
    const auto k1 = f(t, y);
    const auto k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const auto k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const auto k4 = f(t + h, axpy(y, h, k3));
    return {
        y.A + h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A),
        y.B + h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B),
        y.D + h / 6.0 * (k1.D + 2.0 * k2.D + 2.0 * k3.D + k4.D),
    };
}

ode_rhs make_rhs(const closed_form_context& ctx, double beta, double c)
{
    return {2.0 * ctx.mu2 - ctx.moments.eta, ctx.mu2 - ctx.moments.phi, beta, c};
}

} // namespace

abd_values ode_oracle_at(const closed_form_context& ctx, double t, double beta, double c, int steps)
{
    if (steps < 1) throw invalid_argument("ode_oracle_at: steps must be >= 1");
    const auto f = make_rhs(ctx, beta, c);
    const double h = -(ctx.T - t) / steps;
    abd_values y{};
    for (int k = 0; k < steps; ++k) y = rk4_step(f, ctx.T + k * h, y, h);
    return y;
}

std::vector<abd_row> ode_oracle_table(const closed_form_context& ctx, int steps)
{
    if (steps < 100) throw invalid_argument("ode_oracle_table: resolution must be >= 100 steps");
    const auto f = make_rhs(ctx, ctx.beta, ctx.c);
    const double h = -ctx.T / steps;
    std::vector<abd_row> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    abd_values y{};
    out.push_back({ctx.T, y});
    for (int k = 0; k < steps; ++k) {
        y = rk4_step(f, ctx.T + k * h, y, h);
        out.push_back({ctx.T + (k + 1) * h, y});
    }
    return out;
}

} // namespace outperform
