#include "outperform/market_data.hpp"

#include "outperform/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace outperform {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string where(std::string_view source, std::size_t line_no, std::string_view column)
{
    std::ostringstream os;
    os << source << ": row " << line_no << ", column '" << column << "'";
    return os.str();
}

} // namespace

year_month year_month::parse(std::string_view text)
{
    text = trim(text);
    const auto sep = text.find_first_of("-:/");
    if (sep == std::string_view::npos) throw invalid_argument("bad month identifier '" + std::string(text) + "'");
    year_month ym;
    const auto y = text.substr(0, sep);
    const auto m = text.substr(sep + 1);
    auto r1 = std::from_chars(y.data(), y.data() + y.size(), ym.year);
    auto r2 = std::from_chars(m.data(), m.data() + m.size(), ym.month);
    if (r1.ec != std::errc{} || r1.ptr != y.data() + y.size() || r2.ec != std::errc{} ||
        r2.ptr != m.data() + m.size() || ym.month < 1 || ym.month > 12)
        throw invalid_argument("bad month identifier '" + std::string(text) + "'");
    return ym;
}

std::string year_month::str() const
{
    std::ostringstream os;
    os << std::setw(4) << std::setfill('0') << year << '-' << std::setw(2) << month;
    return os.str();
}

year_month year_month::next() const
{
    return month == 12 ? year_month{year + 1, 1} : year_month{year, month + 1};
}

int year_month::months_until(const year_month& other) const
{
    return (other.year - year) * 12 + (other.month - month);
}

std::vector<double> return_table::column(std::size_t asset) const
{
    std::vector<double> out(n_dates());
    for (std::size_t d = 0; d < n_dates(); ++d) out[d] = at(d, asset);
    return out;
}

std::pair<std::size_t, std::size_t> return_table::segment(std::size_t k) const
{
    const std::size_t begin = segment_starts.at(k);
    const std::size_t end = k + 1 < segment_starts.size() ? segment_starts[k + 1] : n_dates();
    return {begin, end};
}

void return_table::validate() const
{
    if (returns.size() != dates.size() * assets.size())
        throw ingestion_error("return table: asset columns do not match the number of dates");
    if (has_cpi() && cpi_return.size() != dates.size())
        throw ingestion_error("return table: cpi column does not match the number of dates");
    if (segment_starts.empty() || segment_starts.front() != 0)
        throw ingestion_error("return table: segment list must start at row 0");
    for (std::size_t d = 1; d < dates.size(); ++d) {
        if (!(dates[d - 1] < dates[d]))
            throw ingestion_error("return table: non-monotone dates at " + dates[d].str());
    }
    for (std::size_t k = 0; k < segment_starts.size(); ++k) {
        const auto [b, e] = segment(k);
        for (std::size_t d = b + 1; d < e; ++d) {
            if (dates[d - 1].next() != dates[d])
                throw ingestion_error("return table: gap inside segment at " + dates[d].str());
        }
    }
    for (std::size_t d = 0; d < dates.size(); ++d) {
        for (std::size_t a = 0; a < assets.size(); ++a) {
            const double r = at(d, a);
            if (!std::isfinite(r) || r <= -1.0)
                throw ingestion_error("return table: return <= -1 at " + dates[d].str() + ", column '" +
                                      assets[a] + "'");
        }
    }
}

return_table parse_return_table(std::string_view csv_text, const std::vector<std::string>& columns,
                                std::string_view source_name)
{
    std::istringstream in{std::string(csv_text)};
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        for (auto f : split_csv(line)) header.emplace_back(f);
        break;
    }
    if (header.empty()) throw ingestion_error(std::string(source_name) + ": empty file");

    int date_col = -1;
    int cpi_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = lower(header[i]);
        if (name == "date") date_col = static_cast<int>(i);
        else if (name == "cpi") cpi_col = static_cast<int>(i);
    }
    if (date_col < 0) throw ingestion_error(std::string(source_name) + ": missing column 'date'");

    std::vector<int> asset_cols;
    return_table table;
    if (columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (static_cast<int>(i) == date_col || static_cast<int>(i) == cpi_col) continue;
            asset_cols.push_back(static_cast<int>(i));
            table.assets.push_back(header[i]);
        }
    } else {
        for (const auto& want : columns) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end()) throw ingestion_error(std::string(source_name) + ": missing column '" + want + "'");
            asset_cols.push_back(static_cast<int>(it - header.begin()));
            table.assets.push_back(want);
        }
    }
    if (asset_cols.empty()) throw ingestion_error(std::string(source_name) + ": no asset columns");

    auto parse_number = [&](std::string_view field, std::size_t row, std::string_view col) {
        double v = 0.0;
        auto r = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || r.ec != std::errc{} || r.ptr != field.data() + field.size())
            throw ingestion_error(where(source_name, row, col) + ": unparsable number '" + std::string(field) + "'");
        return v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw ingestion_error(std::string(source_name) + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
        year_month ym;
        try {
            ym = year_month::parse(fields[date_col]);
        } catch (const invalid_argument& e) {
            throw ingestion_error(where(source_name, line_no, "date") + ": " + e.what());
        }
        if (!table.dates.empty()) {
            if (!(table.dates.back() < ym))
                throw ingestion_error(where(source_name, line_no, "date") + ": non-monotone dates (" + ym.str() +
                                      " after " + table.dates.back().str() + ")");
            if (table.dates.back().next() != ym) table.segment_starts.push_back(table.dates.size());
        }
        table.dates.push_back(ym);
        for (std::size_t k = 0; k < asset_cols.size(); ++k) {
            const double r = parse_number(fields[asset_cols[k]], line_no, header[asset_cols[k]]);
            if (r <= -1.0)
                throw ingestion_error(where(source_name, line_no, header[asset_cols[k]]) + ": return <= -1");
            table.returns.push_back(r);
        }
        if (cpi_col >= 0) {
            const auto f = fields[cpi_col];
            if (f.empty()) {
                table.cpi_return.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                const double r = parse_number(f, line_no, "cpi");
                if (r <= -1.0) throw ingestion_error(where(source_name, line_no, "cpi") + ": return <= -1");
                table.cpi_return.push_back(r);
            }
        }
    }
    if (table.dates.empty()) throw ingestion_error(std::string(source_name) + ": no data rows");
    return table;
}

return_table load_return_table(const std::filesystem::path& path, const std::vector<std::string>& columns)
{
    std::ifstream in(path);
    if (!in) throw ingestion_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_return_table(buf.str(), columns, path.string());
}

void write_return_table(const std::filesystem::path& path, const return_table& table)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << "date";
    for (const auto& a : table.assets) out << ',' << a;
    if (table.has_cpi()) out << ",cpi";
    out << '\n' << std::setprecision(17);
    for (std::size_t d = 0; d < table.n_dates(); ++d) {
        out << table.dates[d].str();
        for (std::size_t a = 0; a < table.n_assets(); ++a) out << ',' << table.at(d, a);
        if (table.has_cpi()) out << ',' << table.cpi_return[d];
        out << '\n';
    }
}

return_table deflate(const return_table& nominal)
{
    if (!nominal.has_cpi()) throw invalid_argument("deflate: table has no cpi column");
    return_table real = nominal;
    for (std::size_t d = 0; d < nominal.n_dates(); ++d) {
        const double cpi = nominal.cpi_return[d];
        if (!std::isfinite(cpi)) throw invalid_argument("deflate: missing CPI entry at " + nominal.dates[d].str());
        for (std::size_t a = 0; a < nominal.n_assets(); ++a) {
            real.returns[d * nominal.n_assets() + a] = (1.0 + nominal.at(d, a)) / (1.0 + cpi) - 1.0;
        }
        real.cpi_return[d] = 0.0;
    }
    return real;
}

std::vector<double> cpi_index_levels(const return_table& table)
{
    if (!table.has_cpi()) throw invalid_argument("cpi_index_levels: table has no cpi column");
    std::vector<double> levels(table.n_dates());
    double level = 1.0;
    for (std::size_t d = 0; d < table.n_dates(); ++d) {
        const double cpi = table.cpi_return[d];
        if (!std::isfinite(cpi)) throw invalid_argument("cpi_index_levels: missing CPI entry at " + table.dates[d].str());
        level *= 1.0 + cpi;
        levels[d] = level;
    }
    return levels;
}

std::size_t regime_mask::flagged_count() const
{
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
}

regime_mask filter_high_inflation(std::span<const double> cpi_index, int window_k, double cutoff, double dt)
{
    const std::size_t n = cpi_index.size();
    if (window_k < 1) throw invalid_argument("filter_high_inflation: window must be at least one month");
    if (static_cast<std::size_t>(window_k) >= n)
        throw invalid_argument("filter_high_inflation: window " + std::to_string(window_k) +
                               " is not shorter than the series length " + std::to_string(n));
    if (!(dt > 0.0)) throw invalid_argument("filter_high_inflation: dt must be positive");
    for (double level : cpi_index) {
        if (!(level > 0.0)) throw invalid_argument("filter_high_inflation: CPI index levels must be positive");
    }
    regime_mask mask;
    mask.flags.assign(n, 0);
    mask.window_k = window_k;
    mask.cutoff = cutoff;
    const auto k = static_cast<std::size_t>(window_k);
    for (std::size_t i = 0; i + k < n; ++i) {
        const double annualized = std::log(cpi_index[i + k] / cpi_index[i]) / (window_k * dt);
        if (annualized > cutoff) {
            for (std::size_t j = 0; j <= k; ++j) mask.flags[i + j] = 1;
        }
    }
    return mask;
}

return_table extract_concatenate(const return_table& table, const regime_mask& mask)
{
    if (mask.flags.size() != table.n_dates())
        throw invalid_argument("extract_concatenate: mask length does not match the table");
    return_table out;
    out.assets = table.assets;
    out.segment_starts.clear();
    std::size_t src_segment = 0;
    bool prev_taken = false;
    for (std::size_t d = 0; d < table.n_dates(); ++d) {
        bool new_src_segment = false;
        while (src_segment + 1 < table.segment_starts.size() && table.segment_starts[src_segment + 1] <= d) {
            ++src_segment;
            new_src_segment = table.segment_starts[src_segment] == d;
        }
        if (!mask.flags[d]) {
            prev_taken = false;
            continue;
        }
        if (!prev_taken || new_src_segment) out.segment_starts.push_back(out.dates.size());
        prev_taken = true;
        out.dates.push_back(table.dates[d]);
        const auto row = table.row(d);
        out.returns.insert(out.returns.end(), row.begin(), row.end());
        if (table.has_cpi()) out.cpi_return.push_back(table.cpi_return[d]);
    }
    if (out.dates.empty()) throw invalid_argument("extract_concatenate: no flagged months");
    return out;
}

std::vector<regime_summary> summarize_regimes(const return_table& table, const regime_mask& mask)
{
    if (mask.flags.size() != table.n_dates())
        throw invalid_argument("summarize_regimes: mask length does not match the table");
    std::vector<regime_summary> out;
    std::size_t d = 0;
    while (d < table.n_dates()) {
        if (!mask.flags[d]) {
            ++d;
            continue;
        }
        std::size_t e = d;
        double log_growth = 0.0;
        while (e < table.n_dates() && mask.flags[e]) {
            if (table.has_cpi()) log_growth += std::log1p(table.cpi_return[e]);
            ++e;
        }
        regime_summary s;
        s.first = table.dates[d];
        s.last = table.dates[e - 1];
        s.months = e - d;
        s.annualized_inflation = std::expm1(log_growth * 12.0 / static_cast<double>(s.months));
        out.push_back(s);
        d = e;
    }
    return out;
}

void write_regime_mask(const std::filesystem::path& path, const return_table& table, const regime_mask& mask)
{
    if (mask.flags.size() != table.n_dates())
        throw invalid_argument("write_regime_mask: mask length does not match the table");
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << "date,flag\n";
    for (std::size_t d = 0; d < table.n_dates(); ++d) out << table.dates[d].str() << ',' << int(mask.flags[d]) << '\n';
}

gbm_fit fit_gbm(std::span<const double> returns, double dt)
{
    if (returns.size() < 2) throw invalid_argument("fit_gbm: need at least two observations");
    if (!(dt > 0.0)) throw invalid_argument("fit_gbm: dt must be positive");
    double sum = 0.0;
    for (double r : returns) {
        if (!(r > -1.0)) throw invalid_argument("fit_gbm: return <= -1");
        sum += std::log1p(r);
    }
    const double n = static_cast<double>(returns.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double r : returns) {
        const double dev = std::log1p(r) - mean;
        ss += dev * dev;
    }
    gbm_fit fit;
    fit.sigma = std::sqrt(ss / n / dt);
    fit.mu = mean / dt + 0.5 * fit.sigma * fit.sigma;
    return fit;
}

} // namespace outperform
