#pragma once

#include "outperform/market_data.hpp"
#include "outperform/rng.hpp"
#include "outperform/scenario_set.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace outperform {

/// Shifted geometric block length: P(k) = q (1 - q)^(k - 1), q = 1 / expected.
std::size_t sample_blocksize(rng_engine& rng, double expected_blocksize);

/// Appends up to `blocksize` row indices starting at `start`, wrapping
/// circularly inside [segment_begin, segment_end), and stops early once
/// `rows` holds `required` entries.
void append_circular_block(std::vector<std::size_t>& rows, std::size_t start, std::size_t blocksize,
                           std::size_t segment_begin, std::size_t segment_end, std::size_t required);

struct bootstrap_options {
    std::size_t n_scenarios = 10000;
    std::size_t n_periods = 120;
    double expected_blocksize = 6.0;
    std::uint64_t seed = 0;
    double dt = 1.0 / 12.0;
    /// Draw blocks within one source segment at a time (segment picked with
    /// probability proportional to its length) instead of treating the
    /// concatenated table as one circular series.
    bool per_segment = false;
    int threads = 0;
};

/// Source-row indices of one resampled path.
std::vector<std::size_t> bootstrap_row_indices(rng_engine& rng, const return_table& table,
                                               const bootstrap_options& options);

/// Stationary block bootstrap of joint rows. Scenario i is generated from its
/// own sub-stream, so the result is independent of the thread count.
scenario_set stationary_block_bootstrap(const return_table& table, const bootstrap_options& options);

} // namespace outperform
