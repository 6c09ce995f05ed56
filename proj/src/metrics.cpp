#include "outperform/metrics.hpp"

#include "outperform/error.hpp"
#include "outperform/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace outperform {

empirical_cdf::empirical_cdf(std::vector<double> samples) : sorted_(std::move(samples))
{
    if (sorted_.empty()) throw invalid_argument("empirical_cdf: no samples");
    for (double v : sorted_)
        if (std::isnan(v)) throw invalid_argument("empirical_cdf: NaN sample");
    std::sort(sorted_.begin(), sorted_.end());
}

std::size_t empirical_cdf::count_at_or_below(double x) const
{
    return static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
}

double empirical_cdf::operator()(double x) const
{
    return static_cast<double>(count_at_or_below(x)) / static_cast<double>(sorted_.size());
}

double nearest_rank(std::span<const double> sorted, double level)
{
    if (sorted.empty()) throw invalid_argument("nearest_rank: no samples");
    if (!(level >= 0.0 && level <= 1.0)) throw invalid_argument("nearest_rank: level must lie in [0, 1]");
    const double n = static_cast<double>(sorted.size());
    // Small slack so that e.g. 0.2 * 10 does not round up to rank 3.
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double median(std::vector<double> values)
{
    if (values.empty()) throw invalid_argument("median: no samples");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

dominance_result partial_dominance(std::span<const double> a, std::span<const double> b, double p_lo, double p_hi)
{
    if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 1.0))
        throw invalid_argument("partial_dominance: need 0 <= p_lo < p_hi <= 1");
    const empirical_cdf fa({a.begin(), a.end()});
    const empirical_cdf fb({b.begin(), b.end()});
    std::vector<double> pooled(fa.sorted());
    pooled.insert(pooled.end(), fb.sorted().begin(), fb.sorted().end());
    std::sort(pooled.begin(), pooled.end());

    dominance_result out;
    out.w_lo = nearest_rank(pooled, p_lo);
    out.w_hi = nearest_rank(pooled, p_hi);

    // Both CDFs are constant between pooled sample points, so the sample
    // points in [w_lo, w_hi] are enough. Compare counts exactly:
    // F_A <= F_B  <=>  count_A * n_B <= count_B * n_A.
    const auto na = static_cast<long double>(fa.size());
    const auto nb = static_cast<long double>(fb.size());
    bool all_le = true;
    bool some_lt = false;
    int prev_sign = 0;
    const auto first = std::lower_bound(pooled.begin(), pooled.end(), out.w_lo);
    const auto last = std::upper_bound(pooled.begin(), pooled.end(), out.w_hi);
    for (auto it = first; it != last; ++it) {
        if (it != first && *it == *(it - 1)) continue;
        const long double lhs = static_cast<long double>(fa.count_at_or_below(*it)) * nb;
        const long double rhs = static_cast<long double>(fb.count_at_or_below(*it)) * na;
        const int sign = lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
        if (sign > 0) all_le = false;
        if (sign < 0) some_lt = true;
        if (sign != 0) {
            if (prev_sign != 0 && sign != prev_sign) out.crossings.push_back(*it);
            prev_sign = sign;
        }
    }
    out.dominates = all_le && some_lt;
    return out;
}

double irr(double w0, std::span<const cash_flow> injections, double w_T, double T)
{
    if (!(w0 > 0.0)) throw invalid_argument("irr: w0 must be positive");
    if (!(w_T > 0.0)) throw invalid_argument("irr: terminal wealth must be positive");
    if (!(T > 0.0)) throw invalid_argument("irr: horizon must be positive");
    auto f = [&](double r) {
        const double g = std::log1p(r);
        double v = w0 * std::exp(g * T);
        for (const auto& cf : injections) v += cf.amount * std::exp(g * (T - cf.time));
        return v - w_T;
    };
    double lo = -0.99;
    double hi = 10.0;
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) throw numeric_error("irr: no sign change on [-0.99, 10]");
    const double tol = 1e-10 * w_T;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        if (std::abs(f_mid) <= tol || mid == lo || mid == hi) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<cash_flow> injection_schedule(const investment_scenario& scenario)
{
    const std::size_t n = scenario.n_periods();
    std::vector<cash_flow> out;
    if (scenario.injection_per_period() == 0.0) return out;
    out.reserve(n);
    for (std::size_t j = 1; j <= n; ++j) out.push_back({scenario.time(j), scenario.injection_per_period()});
    return out;
}

double richardson_extrapolate(std::span<const std::pair<double, double>> dt_value)
{
    if (dt_value.size() < 2) throw invalid_argument("richardson: need at least two (dt, value) pairs");
    std::vector<std::pair<double, double>> v(dt_value.begin(), dt_value.end());
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].first == v[i - 1].first) throw invalid_argument("richardson: duplicate dt");
    if (!(v[0].first > 0.0)) throw invalid_argument("richardson: dt must be positive");
    const auto [dt2, v2] = v[0];
    const auto [dt1, v1] = v[1];
    return v2 + (v2 - v1) * dt2 / (dt1 - dt2);
}

namespace {

strategy_stats summarize(const std::string& name, std::span<const double> wealth, std::span<const double> bench,
                         std::size_t n_paths, std::size_t n_dates, const std::vector<double>& times,
                         const investment_scenario& scenario, const objective_spec& spec, std::size_t insolvent,
                         int threads)
{
    strategy_stats st;
    st.name = name;
    st.insolvent_paths = insolvent;
    std::vector<double> terminal(n_paths);
    std::vector<double> ratio(n_paths);
    std::size_t wins = 0;
    double objective = 0.0;
    for (std::size_t s = 0; s < n_paths; ++s) {
        const double w = wealth[s * n_dates + n_dates - 1];
        const double b = bench[s * n_dates + n_dates - 1];
        terminal[s] = w;
        ratio[s] = w / b;
        if (w > b) ++wins;
        objective += path_objective(times, wealth.subspan(s * n_dates, n_dates), bench.subspan(s * n_dates, n_dates),
                                    spec, scenario.dt);
    }
    const double n = static_cast<double>(n_paths);
    st.objective = objective / n;
    st.prob_outperform = static_cast<double>(wins) / n;
    st.median_terminal_ratio = median(ratio);
    st.terminal_median = median(terminal);
    double mean = 0.0;
    for (double w : terminal) mean += w;
    mean /= n;
    double ss = 0.0;
    for (double w : terminal) ss += (w - mean) * (w - mean);
    st.terminal_mean = mean;
    st.terminal_std = n_paths > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::vector<double> sorted = terminal;
    std::sort(sorted.begin(), sorted.end());
    st.terminal_p5 = nearest_rank(sorted, 0.05);

    const auto flows = injection_schedule(scenario);
    std::vector<double> rates(n_paths, std::nan(""));
    parallel::for_each_index(n_paths, threads, [&](std::size_t s) {
        if (terminal[s] > 0.0) rates[s] = irr(scenario.w0, flows, terminal[s], scenario.T);
    });
    std::vector<double> defined;
    defined.reserve(n_paths);
    for (double r : rates)
        if (!std::isnan(r)) defined.push_back(r);
    st.irr_undefined = n_paths - defined.size();
    st.median_irr = defined.empty() ? std::nan("") : median(defined);
    return st;
}

wealth_ratio_fan make_fan(const std::string& name, std::span<const double> wealth, std::span<const double> bench,
                          std::size_t n_paths, std::size_t n_dates, int threads)
{
    wealth_ratio_fan fan;
    fan.name = name;
    fan.ratio.assign(std::size(fan_levels), std::vector<double>(n_dates));
    parallel::for_each_index(n_dates, threads, [&](std::size_t j) {
        std::vector<double> slice(n_paths);
        for (std::size_t s = 0; s < n_paths; ++s) slice[s] = wealth[s * n_dates + j] / bench[s * n_dates + j];
        std::sort(slice.begin(), slice.end());
        for (std::size_t k = 0; k < std::size(fan_levels); ++k) fan.ratio[k][j] = nearest_rank(slice, fan_levels[k]);
    });
    return fan;
}

} // namespace

eval_report make_report(std::span<const named_trajectories> strategies, const investment_scenario& scenario,
                        const objective_spec& spec, int threads)
{
    if (strategies.empty()) throw invalid_argument("report: no strategies");
    const trajectory_set& first = *strategies.front().set;
    for (const auto& s : strategies) {
        if (s.set == nullptr) throw invalid_argument("report: null trajectory set");
        if (s.set->n_paths != first.n_paths || s.set->n_dates != first.n_dates)
            throw invalid_argument("report: strategies were evaluated on different scenario sets (" + s.name + ")");
        if (s.set->benchmark != first.benchmark)
            throw invalid_argument("report: benchmark trajectories differ for strategy " + s.name);
    }
    if (first.n_paths == 0) throw invalid_argument("report: no paths");
    eval_report r;
    r.objective = spec;
    r.dt = scenario.dt;
    r.n_paths = first.n_paths;
    r.times = first.times;
    for (const auto& s : strategies) {
        const auto& set = *s.set;
        r.strategies.push_back(summarize(s.name, set.wealth, set.benchmark, set.n_paths, set.n_dates, set.times,
                                         scenario, spec, set.insolvent_count(), threads));
        r.fans.push_back(make_fan(s.name, set.wealth, set.benchmark, set.n_paths, set.n_dates, threads));
    }
    r.strategies.push_back(summarize("benchmark", first.benchmark, first.benchmark, first.n_paths, first.n_dates,
                                     first.times, scenario, spec, 0, threads));
    return r;
}

namespace {

nlohmann::json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace

void to_json(nlohmann::json& j, const eval_report& r)
{
    j = nlohmann::json::object();
    j["objective"] = {{"kind", to_string(r.objective.kind)},
                      {"beta", r.objective.beta},
                      {"epsilon", r.objective.epsilon},
                      {"weighting", to_string(r.objective.weighting)}};
    j["dt"] = r.dt;
    j["n_paths"] = r.n_paths;
    auto& st = j["strategies"] = nlohmann::json::array();
    for (const auto& s : r.strategies) {
        st.push_back({{"name", s.name},
                      {"terminal_median", number_or_null(s.terminal_median)},
                      {"terminal_mean", number_or_null(s.terminal_mean)},
                      {"terminal_std", number_or_null(s.terminal_std)},
                      {"terminal_p5", number_or_null(s.terminal_p5)},
                      {"median_irr", number_or_null(s.median_irr)},
                      {"irr_undefined_paths", s.irr_undefined},
                      {"prob_outperform", s.prob_outperform},
                      {"median_terminal_ratio", number_or_null(s.median_terminal_ratio)},
                      {"objective", number_or_null(s.objective)},
                      {"insolvent_paths", s.insolvent_paths}});
    }
    auto& fans = j["wealth_ratio_percentiles"] = nlohmann::json::object();
    fans["levels"] = std::vector<double>(std::begin(fan_levels), std::end(fan_levels));
    fans["times"] = r.times;
    for (const auto& f : r.fans) fans["strategies"][f.name] = f.ratio;
}

void write_report(const std::filesystem::path& path, const eval_report& report)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << nlohmann::json(report).dump(2) << '\n';
}

void write_cdf_csv(const std::filesystem::path& path, std::span<const named_trajectories> strategies)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out.precision(17);
    out << "strategy,terminal_wealth,cdf\n";
    auto emit = [&](const std::string& name, std::vector<double> values) {
        const empirical_cdf cdf(std::move(values));
        const auto& v = cdf.sorted();
        const double n = static_cast<double>(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
            out << name << ',' << v[i] << ',' << static_cast<double>(i + 1) / n << '\n';
        }
    };
    for (const auto& s : strategies) {
        const auto& set = *s.set;
        std::vector<double> w(set.n_paths);
        for (std::size_t p = 0; p < set.n_paths; ++p) w[p] = set.W(p, set.n_dates - 1);
        emit(s.name, std::move(w));
    }
    if (!strategies.empty()) {
        const auto& set = *strategies.front().set;
        std::vector<double> w(set.n_paths);
        for (std::size_t p = 0; p < set.n_paths; ++p) w[p] = set.W_hat(p, set.n_dates - 1);
        emit("benchmark", std::move(w));
    }
}

void write_fan_csv(const std::filesystem::path& path, const eval_report& report)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out.precision(17);
    out << "strategy,t";
    for (double l : fan_levels) out << ",p" << static_cast<int>(std::lround(l * 100));
    out << '\n';
    for (const auto& f : report.fans) {
        for (std::size_t j = 0; j < report.times.size(); ++j) {
            out << f.name << ',' << report.times[j];
            for (const auto& row : f.ratio) out << ',' << row[j];
            out << '\n';
        }
    }
}

void write_allocation_scatter_csv(const std::filesystem::path& path, const trajectory_set& set,
                                  const objective_spec& spec, std::size_t max_paths)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out.precision(17);
    out << "path,t,tracking_ratio,allocation0\n";
    const std::size_t n = std::min(max_paths, set.n_paths);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t j = 0; j + 1 < set.n_dates; ++j) {
            const double t = set.times[j];
            const double ratio = set.W(p, j) / (std::exp(spec.beta * t) * set.W_hat(p, j));
            out << p << ',' << t << ',' << ratio << ',' << set.allocation(p, j, 0) << '\n';
        }
    }
}

} // namespace outperform
