#pragma once

#include "outperform/rng.hpp"
#include "outperform/scenario_set.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace outperform {

/// Double-exponential (Kou) jump-diffusion parameters of one asset. The
/// log jump size is +Exp(iota) with probability nu, -Exp(varsigma) otherwise.
struct asset_jump_params {
    std::string name;
    double mu = 0.0;             // uncompensated drift, 1/yr
    double sigma = 0.0;          // diffusive volatility, 1/sqrt(yr)
    double lambda = 0.0;         // jump intensity, jumps/yr
    double nu = 0.0;             // up-jump probability
    double iota = 0.0;           // up-jump rate, > 2 when nu > 0
    double varsigma = 1.0;       // down-jump rate, > 0
    double borrow_premium = 0.0; // 1/yr, charged on short positions by the backtest

    /// E[xi], E[xi^2] and E[log xi] of the jump multiplier.
    double mean_multiplier() const;
    double mean_sq_multiplier() const;
    double mean_log_multiplier() const;
};

struct jump_diffusion_params {
    std::vector<asset_jump_params> assets;
    double rho = 0.0; // Brownian correlation between asset 1 and asset 2

    void validate() const;
};

/// Calibrated two-asset market (real cap-weighted stocks / real 30-day T-bills
/// over the concatenated high-inflation regimes).
jump_diffusion_params calibrated_inflation_market();

/// Jump moments and the auxiliary constants of the closed-form control.
struct jump_moments {
    std::vector<double> kappa;     // E[xi - 1]
    std::vector<double> kappa2;    // E[(xi - 1)^2]
    std::vector<double> sigma2sq;  // sigma^2 + lambda kappa2
    double vartheta = 0.0;         // sigma1 sigma2 rho - sigma2sq_2
    double gamma = 0.0;            // sigma2sq_1 + sigma2sq_2 - 2 sigma1 sigma2 rho
    double phi = 0.0;              // (mu1 - mu2)(mu1 - mu2 + vartheta) / gamma
    double eta = 0.0;              // (mu1 - mu2 + vartheta)^2 / gamma - sigma2sq_2
};

/// Per-asset moments for any asset count; the cross-asset constants are
/// filled only for two assets.
jump_moments compute_jump_moments(const jump_diffusion_params& params);

double sample_jump_multiplier(rng_engine& rng, double nu, double iota, double varsigma);

struct simulation_options {
    double dt = 1.0 / 12.0;
    std::size_t n_periods = 120;
    std::size_t n_scenarios = 10000;
    std::uint64_t seed = 0;
    int threads = 0;
};

/// Exact per-period solution of the correlated jump-diffusion. For each
/// period: one correlated normal pair, then per asset a Poisson jump count and
/// the jump sizes.
scenario_set simulate_paths(const jump_diffusion_params& params, const simulation_options& options);

/// Fills `out` (n_periods x n_assets) with one simulated path drawn from `rng`.
void simulate_one_path(const jump_diffusion_params& params, const jump_moments& moments, double dt,
                       std::size_t n_periods, rng_engine& rng, std::span<double> out);

} // namespace outperform
