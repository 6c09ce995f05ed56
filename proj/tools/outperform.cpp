// Experiment driver. Every subcommand reads one INI config and writes its
// artifacts under <out>/<config hash>-<seed>/.

#include "outperform/backtest.hpp"
#include "outperform/bootstrap.hpp"
#include "outperform/closed_form.hpp"
#include "outperform/config.hpp"
#include "outperform/jump_sim.hpp"
#include "outperform/lfnn.hpp"
#include "outperform/market_data.hpp"
#include "outperform/metrics.hpp"
#include "outperform/parallel.hpp"
#include "outperform/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace outperform;
using nlohmann::json;

namespace {

struct common_options {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
    std::optional<double> dt;
};

void log(const std::string& msg)
{
    std::cerr << "[outperform] " << msg << std::endl;
}

experiment_config load(const common_options& o)
{
    auto cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output = o.out;
    if (o.threads > 0) cfg.threads = o.threads;
    if (o.dt) cfg.investment.dt = *o.dt;
    cfg.validate();
    parallel::set_thread_cap(cfg.threads);
    return cfg;
}

fs::path ensure_dir(const fs::path& p)
{
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_config_copy(const experiment_config& cfg)
{
    const auto dir = ensure_dir(cfg.artifact_dir());
    std::ofstream out(dir / "config.canonical.json");
    out << json::parse(cfg.canonical()).dump(2) << '\n';
}

// The training and test sets never share a seed.
std::uint64_t test_seed(std::uint64_t seed)
{
    return seed + (std::uint64_t{1} << 32);
}

return_table load_source_table(const experiment_config& cfg)
{
    auto table = load_return_table(cfg.data.returns_csv, cfg.data.columns);
    std::optional<regime_mask> mask;
    if (cfg.filter.enabled) {
        if (!table.has_cpi()) throw invalid_argument("the inflation filter needs a cpi column");
        mask = filter_high_inflation(cpi_index_levels(table), cfg.filter.window_months, cfg.filter.cutoff, 1.0 / 12.0);
    }
    if (cfg.data.deflate) table = deflate(table);
    if (mask) table = extract_concatenate(table, *mask);
    return table;
}

scenario_set make_scenarios(const experiment_config& cfg, std::uint64_t seed, std::size_t n)
{
    if (cfg.scenarios.source == scenario_source::simulate) {
        simulation_options o;
        o.dt = cfg.investment.dt;
        o.n_periods = cfg.investment.n_periods();
        o.n_scenarios = n;
        o.seed = seed;
        o.threads = cfg.threads;
        return simulate_paths(cfg.market, o);
    }
    const auto table = load_source_table(cfg);
    if (table.n_assets() != cfg.investment.n_assets())
        throw invalid_argument("data columns do not match [investment] benchmark_weights");
    bootstrap_options o;
    o.n_scenarios = n;
    o.n_periods = cfg.investment.n_periods();
    o.expected_blocksize = cfg.scenarios.expected_blocksize;
    o.seed = seed;
    o.dt = cfg.investment.dt;
    o.per_segment = cfg.scenarios.per_segment;
    o.threads = cfg.threads;
    return stationary_block_bootstrap(table, o);
}

// Loads the named scenario set from the artifact directory, creating it first
// when it is missing.
scenario_set scenarios_for(const experiment_config& cfg, const std::string& which)
{
    const auto stem = ensure_dir(cfg.artifact_dir() / "scenarios") / which;
    if (fs::exists(stem.string() + ".json")) return load_scenarios(stem);
    const bool train_set = which == "train";
    const auto seed = train_set ? cfg.seed : test_seed(cfg.seed);
    const auto n = train_set ? cfg.scenarios.n_train : cfg.scenarios.n_test;
    log("generating " + which + " scenarios (" + std::to_string(n) + " paths)");
    auto set = make_scenarios(cfg, seed, n);
    save_scenarios(set, stem);
    return set;
}

cd_closed_form clipped_control(const experiment_config& cfg)
{
    const auto ctx = closed_form_context::from_market(cfg.market, cfg.objective.beta, cfg.investment.annual_injection,
                                                      cfg.investment.T, cfg.investment.benchmark_weights.at(0),
                                                      cfg.p_min, cfg.investment.p_max);
    if (const auto w = ctx.drift_assumption_warning(); !w.empty()) log("warning: " + w);
    return cd_closed_form(ctx);
}

fs::path checkpoint_path(const experiment_config& cfg)
{
    return cfg.artifact_dir() / "theta.json";
}

json cmd_filter(const experiment_config& cfg)
{
    if (cfg.data.returns_csv.empty()) throw invalid_argument("[data] returns_csv is required by filter");
    const auto table = load_return_table(cfg.data.returns_csv, cfg.data.columns);
    if (!table.has_cpi()) throw invalid_argument("the inflation filter needs a cpi column");
    const auto mask =
        filter_high_inflation(cpi_index_levels(table), cfg.filter.window_months, cfg.filter.cutoff, 1.0 / 12.0);
    const auto dir = ensure_dir(cfg.artifact_dir());
    write_regime_mask(dir / "regime_mask.csv", table, mask);
    json regimes = json::array();
    for (const auto& r : summarize_regimes(table, mask))
        regimes.push_back({{"first", r.first.str()},
                           {"last", r.last.str()},
                           {"months", r.months},
                           {"annualized_inflation", r.annualized_inflation}});
    json out = {{"window_months", mask.window_k},
                {"cutoff", mask.cutoff},
                {"flagged_months", mask.flagged_count()},
                {"total_months", table.n_dates()},
                {"regimes", regimes}};
    if (mask.flagged_count() > 0) {
        auto extracted = extract_concatenate(cfg.data.deflate ? deflate(table) : table, mask);
        write_return_table(dir / "regime_returns.csv", extracted);
    }
    write_json(dir / "regimes.json", out);
    return out;
}

json cmd_scenarios(const experiment_config& cfg)
{
    json out;
    for (const char* which : {"train", "test"}) {
        const auto set = scenarios_for(cfg, which);
        out[which] = {{"n_scenarios", set.n_scenarios},
                      {"n_periods", set.n_periods},
                      {"dt", set.dt},
                      {"seed", set.seed},
                      {"provenance", to_string(set.origin)},
                      {"source", set.source},
                      {"file", (cfg.artifact_dir() / "scenarios" / which).string() + ".bin"}};
    }
    return out;
}

json cmd_train(const experiment_config& cfg)
{
    const auto train_set = scenarios_for(cfg, "train");
    const auto init = initial_theta(cfg.network(), cfg.seed);
    auto tc = cfg.training;
    tc.seed = cfg.seed;
    tc.threads = cfg.threads;
    log("training " + std::to_string(init.values.size()) + " parameters for " + std::to_string(tc.iterations) +
        " iterations");
    const auto start = std::chrono::steady_clock::now();
    const auto progress = [&](const eval_point& e) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char buf[160];
        std::snprintf(buf, sizeof buf, "iteration %zu  training loss %.4f  (%.0f s)", e.iteration, e.loss, secs);
        log(buf);
    };
    const auto dir = ensure_dir(cfg.artifact_dir());
    train_result result;
    try {
        result = train(init, train_set, cfg.investment, cfg.objective, tc, progress);
    } catch (const divergence_error& e) {
        write_loss_history(dir / "loss_history.csv", e.history());
        throw;
    }
    save_checkpoint(checkpoint_path(cfg), result.theta, result.best_iteration);
    write_loss_history(dir / "loss_history.csv", result.history);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {{"checkpoint", checkpoint_path(cfg).string()},
            {"best_training_loss", result.best_loss},
            {"best_iteration", result.best_iteration},
            {"seconds", secs}};
}

struct evaluated {
    std::string name;
    trajectory_set set;
};

evaluated evaluate_named(const experiment_config& cfg, const std::string& strategy, const scenario_set& test)
{
    if (strategy == "benchmark") return {"benchmark", evaluate_strategy(benchmark_policy(cfg.investment), cfg.investment, test, cfg.threads)};
    if (strategy == "clipped")
        return {"clipped", evaluate_strategy(clipped_policy(clipped_control(cfg)), cfg.investment, test, cfg.threads)};
    fs::path ckpt = strategy == "lfnn" ? checkpoint_path(cfg) : fs::path(strategy);
    if (strategy == "lfnn" && !fs::exists(ckpt)) {
        log("no checkpoint for this configuration; training first");
        cmd_train(cfg);
    }
    const auto theta = load_checkpoint(ckpt);
    if (!(theta.arch == cfg.network())) throw invalid_argument("checkpoint architecture does not match the config");
    return {"lfnn", evaluate_strategy(lfnn_policy(lfnn(theta.arch), theta), cfg.investment, test, cfg.threads)};
}

json write_evaluation(const experiment_config& cfg, const std::vector<evaluated>& runs, const std::string& label)
{
    std::vector<named_trajectories> named;
    for (const auto& r : runs) named.push_back({r.name, &r.set});
    const auto report = make_report(named, cfg.investment, cfg.objective, cfg.threads);
    const auto dir = ensure_dir(cfg.artifact_dir() / ("eval-" + label));
    write_report(dir / "report.json", report);
    write_cdf_csv(dir / "terminal_cdf.csv", named);
    write_fan_csv(dir / "wealth_ratio_fan.csv", report);
    write_allocation_scatter_csv(dir / "allocation_scatter.csv", runs.front().set, cfg.objective);
    json j = report;
    j.erase("wealth_ratio_percentiles"); // in the CSV; too long for stdout
    j["report_file"] = (dir / "report.json").string();
    return j;
}

json cmd_evaluate(const experiment_config& cfg, const std::string& strategy)
{
    const auto test = scenarios_for(cfg, "test");
    std::vector<evaluated> runs;
    runs.push_back(evaluate_named(cfg, strategy, test));
    const std::string label = strategy == "benchmark" || strategy == "clipped" || strategy == "lfnn" ? strategy : "checkpoint";
    auto j = write_evaluation(cfg, runs, label);
    return j;
}

json cmd_report(const experiment_config& cfg, std::vector<std::string> strategies)
{
    const auto test = scenarios_for(cfg, "test");
    if (strategies.empty()) {
        strategies = {"clipped"};
        if (fs::exists(checkpoint_path(cfg))) strategies.push_back("lfnn");
    }
    std::vector<evaluated> runs;
    for (const auto& s : strategies) runs.push_back(evaluate_named(cfg, s, test));
    return write_evaluation(cfg, runs, "combined");
}

json cmd_extrapolate(const experiment_config& base, const std::string& strategy, const std::vector<double>& dts)
{
    if (dts.size() < 2) throw invalid_argument("extrapolate needs at least two --dts values");
    std::vector<std::pair<double, double>> values;
    json runs = json::array();
    for (double dt : dts) {
        auto cfg = base;
        cfg.investment.dt = dt;
        cfg.validate();
        log("evaluating " + strategy + " at dt = " + std::to_string(dt));
        const auto test = scenarios_for(cfg, "test");
        const auto run = evaluate_named(cfg, strategy, test);
        const double obj = strategy_objective(run.set, cfg.objective, dt);
        values.emplace_back(dt, obj);
        runs.push_back({{"dt", dt}, {"objective", obj}, {"artifacts", cfg.artifact_dir().string()}});
    }
    const double v0 = richardson_extrapolate(values);
    json out = {{"strategy", strategy}, {"runs", runs}, {"extrapolated", v0}};
    write_json(ensure_dir(base.artifact_dir()) / ("extrapolation-" + strategy + ".json"), out);
    return out;
}

void add_common(CLI::App* cmd, common_options& o, bool with_dt)
{
    cmd->add_option("-c,--config", o.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "override [experiment] seed");
    cmd->add_option("--threads", o.threads, "cap on worker threads (0 = runtime default)");
    cmd->add_option("--out", o.out, "override [experiment] output directory");
    if (with_dt) cmd->add_option("--dt", o.dt, "override [investment] dt");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Benchmark-outperformance experiments: regime filter, scenarios, training and evaluation"};
    app.require_subcommand(1);
    common_options opt;
    std::string strategy = "clipped";
    std::vector<std::string> strategies;
    std::vector<std::string> dts_text;

    auto* filter = app.add_subcommand("filter", "flag high-inflation months and summarize regimes");
    add_common(filter, opt, false);
    auto* scen = app.add_subcommand("scenarios", "generate the training and test scenario sets");
    add_common(scen, opt, true);
    auto* tr = app.add_subcommand("train", "train the LFNN policy");
    add_common(tr, opt, true);
    auto* ev = app.add_subcommand("evaluate", "evaluate one strategy on the test set");
    add_common(ev, opt, true);
    ev->add_option("-s,--strategy", strategy, "benchmark | clipped | lfnn | <checkpoint file>");
    auto* ex = app.add_subcommand("extrapolate", "Richardson extrapolation of a strategy's objective over dt");
    add_common(ex, opt, false);
    ex->add_option("-s,--strategy", strategy, "benchmark | clipped | lfnn");
    ex->add_option("--dts", dts_text, "rebalancing intervals, e.g. 1/4 1/12")->required()->expected(2, -1);
    auto* rep = app.add_subcommand("report", "evaluate several strategies together on the test set");
    add_common(rep, opt, true);
    rep->add_option("-s,--strategies", strategies, "default: clipped, plus lfnn when a checkpoint exists");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load(opt);
        write_config_copy(cfg);
        json result;
        if (*filter) result = cmd_filter(cfg);
        else if (*scen) result = cmd_scenarios(cfg);
        else if (*tr) result = cmd_train(cfg);
        else if (*ev) result = cmd_evaluate(cfg, strategy);
        else if (*rep) result = cmd_report(cfg, strategies);
        else if (*ex) {
            std::vector<double> dts;
            for (const auto& t : dts_text) {
                const auto slash = t.find('/');
                dts.push_back(slash == std::string::npos ? std::stod(t)
                                                         : std::stod(t.substr(0, slash)) / std::stod(t.substr(slash + 1)));
            }
            result = cmd_extrapolate(cfg, strategy, dts);
        }
        result["artifact_dir"] = cfg.artifact_dir().string();
        std::cout << result.dump(2) << std::endl;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
