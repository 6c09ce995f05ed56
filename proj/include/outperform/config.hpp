#pragma once

#include "outperform/backtest.hpp"
#include "outperform/error.hpp"
#include "outperform/jump_sim.hpp"
#include "outperform/lfnn.hpp"
#include "outperform/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace outperform {

enum class scenario_source { simulate, bootstrap };

struct data_config {
    std::filesystem::path returns_csv; // empty when the experiment is purely simulated
    std::vector<std::string> columns;
    bool deflate = true;
};

struct filter_config {
    bool enabled = false;
    int window_months = 120;
    double cutoff = 0.05;
};

struct scenario_config {
    scenario_source source = scenario_source::simulate;
    std::size_t n_train = 10000;
    std::size_t n_test = 10000;
    double expected_blocksize = 6.0;
    bool per_segment = false;
};

struct experiment_config {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::filesystem::path output = "out";
    int threads = 0;

    data_config data;
    filter_config filter;
    scenario_config scenarios;
    jump_diffusion_params market = calibrated_inflation_market();
    investment_scenario investment;
    objective_spec objective;
    std::vector<std::size_t> hidden{10};
    train_config training;
    double p_min = 0.0; // lower clip of the closed-form stock fraction

    /// Every problem found, one message per entry; empty when valid.
    std::vector<std::string> problems() const;
    /// Throws config_error listing every problem.
    void validate() const;

    lfnn_config network() const;
    /// Deterministic text of every setting that influences results.
    std::string canonical() const;
    /// First 12 hex digits of SHA-256(canonical()).
    std::string hash() const;
    /// <output>/<hash>-<seed>
    std::filesystem::path artifact_dir() const;
};

class config_error : public invalid_argument {
public:
    explicit config_error(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// INI text with sections [experiment], [data], [filter], [scenarios],
/// [market] (+ one [asset.<name>] per asset), [investment], [objective],
/// [network], [training], [closed_form]. Unknown sections or keys and
/// unparsable values are reported together. Relative data paths are resolved
/// against `base_dir`.
experiment_config parse_config(std::string_view ini_text, const std::filesystem::path& base_dir = {});
experiment_config load_config(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

} // namespace outperform
