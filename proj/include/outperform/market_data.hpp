#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace outperform {

/// Calendar month, written YYYY-MM.
struct year_month {
    int year = 0;
    int month = 1; // 1..12

    static year_month parse(std::string_view text);
    std::string str() const;
    year_month next() const;
    /// Months elapsed from `*this` to `other`.
    int months_until(const year_month& other) const;

    auto operator<=>(const year_month&) const = default;
};

/// Monthly per-asset simple returns plus the matching CPI monthly return.
///
/// Rows are dates; `returns` is stored row-major (date, asset). A table may be
/// made of several contiguous segments (after regime extraction); each segment
/// covers consecutive calendar months and `segment_starts` holds the first row
/// of every segment.
struct return_table {
    std::vector<year_month> dates;
    std::vector<std::string> assets;
    std::vector<double> returns;
    std::vector<double> cpi_return; // empty when the source had no CPI column
    std::vector<std::size_t> segment_starts{0};

    std::size_t n_dates() const { return dates.size(); }
    std::size_t n_assets() const { return assets.size(); }
    bool has_cpi() const { return !cpi_return.empty(); }

    double at(std::size_t date, std::size_t asset) const { return returns[date * assets.size() + asset]; }
    std::span<const double> row(std::size_t date) const
    {
        return {returns.data() + date * assets.size(), assets.size()};
    }
    std::vector<double> column(std::size_t asset) const;

    /// [begin, end) row range of segment `k`.
    std::pair<std::size_t, std::size_t> segment(std::size_t k) const;

    /// Throws ingestion_error naming the offending row/column when an
    /// invariant does not hold.
    void validate() const;
};

/// Reads a CSV with a `date` column (YYYY-MM), one column per asset and an
/// optional `cpi` column. `columns` selects asset columns by name; empty means
/// every column other than `date` and `cpi`. A blank CPI cell is kept as NaN
/// so that `deflate` can report the date; blank asset cells are errors.
return_table load_return_table(const std::filesystem::path& path, const std::vector<std::string>& columns = {});
return_table parse_return_table(std::string_view csv_text, const std::vector<std::string>& columns = {},
                                std::string_view source_name = "<memory>");

void write_return_table(const std::filesystem::path& path, const return_table& table);

/// Real returns (1 + nominal) / (1 + cpi) - 1. The output CPI column is zero.
return_table deflate(const return_table& nominal);

/// CPI index levels obtained by compounding `cpi_return` from 1.
std::vector<double> cpi_index_levels(const return_table& table);

struct regime_mask {
    std::vector<unsigned char> flags;
    int window_k = 0;
    double cutoff = 0.0;

    std::size_t flagged_count() const;
};

/// Moving-window inflation filter. For every window start i with
/// log(CPI[i+K]/CPI[i]) / (K dt) > cutoff, months i..i+K are flagged.
regime_mask filter_high_inflation(std::span<const double> cpi_index, int window_k, double cutoff, double dt);

/// Flagged rows in their original order. A new segment starts wherever the
/// flag run is interrupted or the source table itself had a segment break.
return_table extract_concatenate(const return_table& table, const regime_mask& mask);

struct regime_summary {
    year_month first;
    year_month last;
    std::size_t months = 0;
    /// Geometric average annual CPI inflation over the regime.
    double annualized_inflation = 0.0;
};

std::vector<regime_summary> summarize_regimes(const return_table& table, const regime_mask& mask);

void write_regime_mask(const std::filesystem::path& path, const return_table& table, const regime_mask& mask);

struct gbm_fit {
    double mu = 0.0;    // drift of dS = mu S dt + sigma S dZ, per year
    double sigma = 0.0; // per sqrt(year)
};

/// Maximum-likelihood GBM fit from simple per-period returns.
gbm_fit fit_gbm(std::span<const double> returns, double dt);

} // namespace outperform
