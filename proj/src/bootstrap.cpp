#include "outperform/bootstrap.hpp"

#include "outperform/error.hpp"
#include "outperform/parallel.hpp"

#include <algorithm>
#include <random>

namespace outperform {

std::size_t sample_blocksize(rng_engine& rng, double expected_blocksize)
{
    if (!(expected_blocksize >= 1.0)) throw invalid_argument("sample_blocksize: expected blocksize must be >= 1");
    if (expected_blocksize == 1.0) return 1;
    std::geometric_distribution<std::size_t> failures(1.0 / expected_blocksize);
    return failures(rng) + 1;
}

void append_circular_block(std::vector<std::size_t>& rows, std::size_t start, std::size_t blocksize,
                           std::size_t segment_begin, std::size_t segment_end, std::size_t required)
{
    const std::size_t len = segment_end - segment_begin;
    for (std::size_t i = 0; i < blocksize && rows.size() < required; ++i) {
        rows.push_back(segment_begin + (start - segment_begin + i) % len);
    }
}

std::vector<std::size_t> bootstrap_row_indices(rng_engine& rng, const return_table& table,
                                               const bootstrap_options& options)
{
    const std::size_t n = table.n_dates();
    std::vector<std::size_t> rows;
    rows.reserve(options.n_periods);
    std::uniform_int_distribution<std::size_t> any_row(0, n - 1);
    while (rows.size() < options.n_periods) {
        std::size_t begin = 0;
        std::size_t end = n;
        const std::size_t start = any_row(rng);
        if (options.per_segment && table.segment_starts.size() > 1) {
            // A uniform row selects its segment with probability proportional
            // to the segment length and is uniform within it.
            const auto it = std::upper_bound(table.segment_starts.begin(), table.segment_starts.end(), start);
            std::tie(begin, end) = table.segment(static_cast<std::size_t>(it - table.segment_starts.begin()) - 1);
        }
        const std::size_t blocksize = sample_blocksize(rng, options.expected_blocksize);
        append_circular_block(rows, start, blocksize, begin, end, options.n_periods);
    }
    return rows;
}

scenario_set stationary_block_bootstrap(const return_table& table, const bootstrap_options& options)
{
    if (table.n_dates() == 0 || table.n_assets() == 0) throw invalid_argument("stationary_block_bootstrap: empty table");
    if (options.n_periods < 1) throw invalid_argument("stationary_block_bootstrap: n_periods must be >= 1");
    if (!(options.expected_blocksize >= 1.0))
        throw invalid_argument("stationary_block_bootstrap: expected blocksize must be >= 1");

    scenario_set set(options.n_scenarios, options.n_periods, table.n_assets());
    set.dt = options.dt;
    set.seed = options.seed;
    set.origin = provenance::bootstrap;
    set.assets = table.assets;
    set.source = std::string(options.per_segment ? "per-segment" : "concatenated") + " stationary block bootstrap, " +
                 std::to_string(table.n_dates()) + " source months (" + table.dates.front().str() + ".." +
                 table.dates.back().str() + "), expected blocksize " + std::to_string(options.expected_blocksize);

    const std::size_t na = table.n_assets();
    parallel::for_each_index(options.n_scenarios, options.threads, [&](std::size_t s) {
        auto rng = substream(options.seed, stream_domain::bootstrap, s);
        const auto rows = bootstrap_row_indices(rng, table, options);
        auto out = set.path(s);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            const auto src = table.row(rows[t]);
            std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(t * na));
        }
    });
    return set;
}

} // namespace outperform
