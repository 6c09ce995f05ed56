#pragma once

#include "outperform/backtest.hpp"
#include "outperform/training.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace outperform {

/// Right-continuous empirical CDF.
class empirical_cdf {
public:
    explicit empirical_cdf(std::vector<double> samples);

    /// Fraction of samples <= x.
    double operator()(double x) const;
    /// Number of samples <= x.
    std::size_t count_at_or_below(double x) const;
    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// Nearest-rank percentile of ascending `sorted`: the ceil(level * n)-th
/// smallest value (level in [0, 1]; level 0 gives the minimum).
double nearest_rank(std::span<const double> sorted, double level);

/// Midpoint median (mean of the two central values for even sizes).
double median(std::vector<double> values);

struct dominance_result {
    bool dominates = false;
    double w_lo = 0.0;
    double w_hi = 0.0;
    /// Wealth values at which F_A - F_B changes sign inside [w_lo, w_hi].
    std::vector<double> crossings;
};

/// Whether A partially dominates B: F_A <= F_B on [w_lo, w_hi] with strict
/// inequality somewhere, where w_lo and w_hi are the nearest-rank quantiles at
/// levels p_lo and p_hi of the pooled sample.
dominance_result partial_dominance(std::span<const double> a, std::span<const double> b, double p_lo = 0.01,
                                   double p_hi = 0.99);

struct cash_flow {
    double time = 0.0;
    double amount = 0.0;
};

/// Annual rate r with w0 (1+r)^T + sum_k c_k (1+r)^(T - t_k) = w_T, by
/// bisection on [-0.99, 10].
double irr(double w0, std::span<const cash_flow> injections, double w_T, double T);

/// The injections of an investment scenario (t_1..t_N).
std::vector<cash_flow> injection_schedule(const investment_scenario& scenario);

/// First-order extrapolation to dt = 0 from the two smallest dt values.
double richardson_extrapolate(std::span<const std::pair<double, double>> dt_value);

struct strategy_stats {
    std::string name;
    double terminal_median = 0.0;
    double terminal_mean = 0.0;
    double terminal_std = 0.0;
    double terminal_p5 = 0.0;
    double median_irr = 0.0;
    std::size_t irr_undefined = 0; // paths with W(T) <= 0
    double prob_outperform = 0.0;  // P(W(T) > W_hat(T)), strict
    double median_terminal_ratio = 0.0;
    double objective = 0.0;
    std::size_t insolvent_paths = 0;
};

inline constexpr double fan_levels[] = {0.05, 0.20, 0.50, 0.80, 0.95};

struct wealth_ratio_fan {
    std::string name;
    /// ratio[k][j]: percentile fan_levels[k] of W(t_j) / W_hat(t_j).
    std::vector<std::vector<double>> ratio;
};

struct eval_report {
    objective_spec objective;
    double dt = 0.0;
    std::size_t n_paths = 0;
    std::vector<double> times;
    std::vector<strategy_stats> strategies; // the benchmark's own row comes last
    std::vector<wealth_ratio_fan> fans;
};

struct named_trajectories {
    std::string name;
    const trajectory_set* set = nullptr;
};

/// All sets must come from the same scenario set (same path count and the
/// same benchmark trajectories).
eval_report make_report(std::span<const named_trajectories> strategies, const investment_scenario& scenario,
                        const objective_spec& spec, int threads = 0);

void to_json(nlohmann::json& j, const eval_report& r);
void write_report(const std::filesystem::path& path, const eval_report& report);

/// (strategy, W) points of each terminal-wealth empirical CDF, including the benchmark.
void write_cdf_csv(const std::filesystem::path& path, std::span<const named_trajectories> strategies);
void write_fan_csv(const std::filesystem::path& path, const eval_report& report);
/// (path, t, tracking ratio, allocation to asset 0) for the first `max_paths` paths.
void write_allocation_scatter_csv(const std::filesystem::path& path, const trajectory_set& set,
                                  const objective_spec& spec, std::size_t max_paths = 200);

} // namespace outperform
