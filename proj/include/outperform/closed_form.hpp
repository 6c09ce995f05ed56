#pragma once

#include "outperform/jump_sim.hpp"

#include <string>
#include <vector>

namespace outperform {

/// Inputs of the continuous-time CD-optimal control for the two-asset
/// (stock, bond) jump-diffusion market.
struct closed_form_context {
    jump_moments moments;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double beta = 0.0;       // outperformance target rate, 1/yr
    double c = 0.0;          // cash injection rate, wealth/yr
    double T = 1.0;          // horizon, yr
    double varrho_hat = 0.0; // benchmark stock fraction
    double p_min = 0.0;
    double p_max = 1.0;

    static closed_form_context from_market(const jump_diffusion_params& market, double beta, double c, double T,
                                           double varrho_hat, double p_min, double p_max);

    /// Empty when mu1 - mu2 > 0 and mu1 - mu2 + vartheta > 0; otherwise a
    /// description of the violated drift condition. Evaluation still works but
    /// the monotonicity properties of the control are no longer guaranteed.
    std::string drift_assumption_warning() const;

    void validate() const;
};

/// Evaluates A, B, D, g, h and the control. All exponential quotients are
/// computed as divided differences of u -> exp(u (T - t)), which stays
/// accurate when any of the rate combinations approaches zero or each other.
class cd_closed_form {
public:
    explicit cd_closed_form(closed_form_context ctx);

    const closed_form_context& context() const { return ctx_; }

    double A(double t) const;
    double D(double t, double beta) const;
    double B(double t, double beta, double c) const;
    double D(double t) const { return D(t, ctx_.beta); }
    double B(double t) const { return B(t, ctx_.beta, ctx_.c); }

    double g(double t, double beta) const;
    double h(double t, double beta, double c) const;
    double g(double t) const { return g(t, ctx_.beta); }
    double h(double t) const { return h(t, ctx_.beta, ctx_.c); }

    /// Unconstrained optimal stock fraction. Throws invalid_argument at w == 0.
    double optimal_control(double t, double w, double w_hat) const;
    /// Cash-injection and tracking parts; they sum to optimal_control.
    double cash_component(double t, double w) const;
    double tracking_component(double t, double w, double w_hat) const;

    double clipped_control(double t, double w, double w_hat) const;

    /// 2 mu2 - eta and mu2 - phi.
    double rate_a() const { return a_; }
    double rate_b() const { return b_; }

private:
    closed_form_context ctx_;
    double a_ = 0.0;
    double b_ = 0.0;
    double k_cash_ = 0.0;
    double k_track_ = 0.0;
};

/// (exp(x tau) - exp(y tau)) / (x - y), limit tau exp(x tau) at x == y.
double exp_divided_difference(double x, double y, double tau);
/// Second divided difference of u -> exp(u tau) at (x, y, z).
double exp_divided_difference(double x, double y, double z, double tau);

struct abd_values {
    double A = 0.0;
    double B = 0.0;
    double D = 0.0;
};

/// Backward RK4 integration of the linear ODE system for A, B, D from the
/// terminal conditions A(T) = B(T) = D(T) = 0 down to time `t`. Used as an
/// independent check of the closed forms.
abd_values ode_oracle_at(const closed_form_context& ctx, double t, double beta, double c, int steps);

struct abd_row {
    double t = 0.0;
    abd_values v;
};

/// Tabulated ODE solution on the grid T - k T / steps, k = 0..steps.
std::vector<abd_row> ode_oracle_table(const closed_form_context& ctx, int steps);

} // namespace outperform
