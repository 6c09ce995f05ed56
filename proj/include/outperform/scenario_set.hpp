#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace outperform {

enum class provenance { bootstrap, simulated };

std::string to_string(provenance p);
provenance provenance_from_string(const std::string& s);

/// n_scenarios x n_periods x n_assets simple per-period returns, stored
/// contiguously in (scenario, period, asset) order.
struct scenario_set {
    std::size_t n_scenarios = 0;
    std::size_t n_periods = 0;
    std::size_t n_assets = 0;
    double dt = 1.0 / 12.0;
    std::uint64_t seed = 0;
    provenance origin = provenance::simulated;
    std::string source;
    std::vector<std::string> assets;
    std::vector<double> returns;

    scenario_set() = default;
    scenario_set(std::size_t scenarios, std::size_t periods, std::size_t n_asset_count)
        : n_scenarios(scenarios), n_periods(periods), n_assets(n_asset_count),
          returns(scenarios * periods * n_asset_count, 0.0)
    {}

    double at(std::size_t s, std::size_t t, std::size_t a) const
    {
        return returns[(s * n_periods + t) * n_assets + a];
    }
    /// Returns of scenario `s`, period-major.
    std::span<const double> path(std::size_t s) const
    {
        return {returns.data() + s * n_periods * n_assets, n_periods * n_assets};
    }
    std::span<double> path(std::size_t s) { return {returns.data() + s * n_periods * n_assets, n_periods * n_assets}; }

    double horizon() const { return dt * static_cast<double>(n_periods); }

    /// Throws ingestion_error on inconsistent dimensions or returns <= -1.
    void validate() const;
};

/// Writes `<stem>.bin` (raw little-endian doubles) and `<stem>.json`
/// (dimensions, dt, seed, provenance, asset names).
void save_scenarios(const scenario_set& set, const std::filesystem::path& stem);
scenario_set load_scenarios(const std::filesystem::path& stem);

} // namespace outperform
