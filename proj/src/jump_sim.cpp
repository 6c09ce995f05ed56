#include "outperform/jump_sim.hpp"

#include "outperform/error.hpp"
#include "outperform/parallel.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace outperform {

double asset_jump_params::mean_multiplier() const
{
    double m = 0.0;
    if (nu > 0.0) m += nu * iota / (iota - 1.0);
    if (nu < 1.0) m += (1.0 - nu) * varsigma / (varsigma + 1.0);
    return m;
}

double asset_jump_params::mean_sq_multiplier() const
{
    double m = 0.0;
    if (nu > 0.0) m += nu * iota / (iota - 2.0);
    if (nu < 1.0) m += (1.0 - nu) * varsigma / (varsigma + 2.0);
    return m;
}

double asset_jump_params::mean_log_multiplier() const
{
    double m = 0.0;
    if (nu > 0.0) m += nu / iota;
    if (nu < 1.0) m -= (1.0 - nu) / varsigma;
    return m;
}

void jump_diffusion_params::validate() const
{
    if (assets.empty() || assets.size() > 2)
        throw invalid_argument("jump-diffusion model supports one or two assets");
    if (!(std::abs(rho) <= 1.0)) throw invalid_argument("jump-diffusion: |rho| must be <= 1");
    for (const auto& a : assets) {
        const std::string who = a.name.empty() ? "asset" : a.name;
        if (!(a.sigma >= 0.0)) throw invalid_argument(who + ": sigma must be >= 0");
        if (!(a.lambda >= 0.0)) throw invalid_argument(who + ": lambda must be >= 0");
        if (!(a.nu >= 0.0 && a.nu <= 1.0)) throw invalid_argument(who + ": nu must lie in [0, 1]");
        if (a.nu > 0.0 && !(a.iota > 2.0)) throw invalid_argument(who + ": infinite second jump moment (iota <= 2)");
        if (a.nu < 1.0 && !(a.varsigma > 0.0)) throw invalid_argument(who + ": varsigma must be > 0");
        if (!std::isfinite(a.mu)) throw invalid_argument(who + ": mu must be finite");
    }
}

jump_diffusion_params calibrated_inflation_market()
{
    jump_diffusion_params p;
    p.assets = {
        {"stock", 0.051, 0.146, 0.178, 0.2, 7.13, 7.33, 0.0},
        {"bond", -0.014, 0.017, 0.321, 0.0, 0.0, 44.48, 0.0},
    };
    p.rho = 0.14;
    return p;
}

jump_moments compute_jump_moments(const jump_diffusion_params& params)
{
    params.validate();
    jump_moments m;
    for (const auto& a : params.assets) {
        const double e1 = a.mean_multiplier();
        const double e2 = a.mean_sq_multiplier();
        const double k2 = a.lambda > 0.0 ? e2 - 2.0 * e1 + 1.0 : 0.0;
        m.kappa.push_back(a.lambda > 0.0 ? e1 - 1.0 : 0.0);
        m.kappa2.push_back(k2);
        m.sigma2sq.push_back(a.sigma * a.sigma + a.lambda * k2);
    }
    if (params.assets.size() == 2) {
        const auto& s1 = params.assets[0];
        const auto& s2 = params.assets[1];
        const double cross = s1.sigma * s2.sigma * params.rho;
        m.vartheta = cross - m.sigma2sq[1];
        m.gamma = m.sigma2sq[0] + m.sigma2sq[1] - 2.0 * cross;
        const double spread = s1.mu - s2.mu;
        // Degenerate spread variance (e.g. rho = 1, equal volatilities): the
        // simulator is fine, the closed form rejects it.
        if (m.gamma > 0.0) {
            m.phi = spread * (spread + m.vartheta) / m.gamma;
            m.eta = (spread + m.vartheta) * (spread + m.vartheta) / m.gamma - m.sigma2sq[1];
        } else {
            m.phi = m.eta = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return m;
}

namespace {

double sample_log_jump(rng_engine& rng, double nu, double iota, double varsigma)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < nu) return std::exponential_distribution<double>(iota)(rng);
    return -std::exponential_distribution<double>(varsigma)(rng);
}

} // namespace

double sample_jump_multiplier(rng_engine& rng, double nu, double iota, double varsigma)
{
    return std::exp(sample_log_jump(rng, nu, iota, varsigma));
}

void simulate_one_path(const jump_diffusion_params& params, const jump_moments& moments, double dt,
                       std::size_t n_periods, rng_engine& rng, std::span<double> out)
{
    const std::size_t na = params.assets.size();
    const double sqdt = std::sqrt(dt);
    const double rho_perp = std::sqrt(1.0 - params.rho * params.rho);
    double drift[2];
    std::poisson_distribution<int> counts[2];
    for (std::size_t i = 0; i < na; ++i) {
        const auto& a = params.assets[i];
        drift[i] = (a.mu - a.lambda * moments.kappa[i] - 0.5 * a.sigma * a.sigma) * dt;
        counts[i] = std::poisson_distribution<int>(a.lambda * dt > 0.0 ? a.lambda * dt : 1.0);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t t = 0; t < n_periods; ++t) {
        const double z1 = normal(rng);
        const double zp = normal(rng);
        const double z[2] = {z1, params.rho * z1 + rho_perp * zp};
        for (std::size_t i = 0; i < na; ++i) {
            const auto& a = params.assets[i];
            double log_gross = drift[i] + a.sigma * sqdt * z[i];
            if (a.lambda > 0.0) {
                const int k = counts[i](rng);
                for (int j = 0; j < k; ++j) log_gross += sample_log_jump(rng, a.nu, a.iota, a.varsigma);
            }
            out[t * na + i] = std::expm1(log_gross);
        }
    }
}

scenario_set simulate_paths(const jump_diffusion_params& params, const simulation_options& options)
{
    const auto moments = compute_jump_moments(params);
    if (!(options.dt > 0.0)) throw invalid_argument("simulate_paths: dt must be positive");
    scenario_set set(options.n_scenarios, options.n_periods, params.assets.size());
    set.dt = options.dt;
    set.seed = options.seed;
    set.origin = provenance::simulated;
    for (const auto& a : params.assets) set.assets.push_back(a.name);
    std::ostringstream src;
    src << "double-exponential jump diffusion, rho=" << params.rho;
    set.source = src.str();
    parallel::for_each_index(options.n_scenarios, options.threads, [&](std::size_t s) {
        auto rng = substream(options.seed, stream_domain::simulation, s);
        simulate_one_path(params, moments, options.dt, options.n_periods, rng, set.path(s));
    });
    return set;
}

} // namespace outperform
