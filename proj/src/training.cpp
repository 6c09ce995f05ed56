#include "outperform/training.hpp"

#include "outperform/parallel.hpp"
#include "outperform/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace outperform {

std::string to_string(objective_kind k)
{
    return k == objective_kind::cd ? "cd" : "cs";
}

objective_kind objective_kind_from_string(const std::string& s)
{
    if (s == "cd" || s == "CD") return objective_kind::cd;
    if (s == "cs" || s == "CS") return objective_kind::cs;
    throw invalid_argument("unknown objective kind '" + s + "' (expected cd or cs)");
}

std::string to_string(objective_weighting w)
{
    return w == objective_weighting::dt ? "dt" : "unit";
}

objective_weighting objective_weighting_from_string(const std::string& s)
{
    if (s == "dt") return objective_weighting::dt;
    if (s == "unit") return objective_weighting::unit;
    throw invalid_argument("unknown objective weighting '" + s + "' (expected dt or unit)");
}

void objective_spec::validate() const
{
    if (!std::isfinite(beta)) throw invalid_argument("objective: beta must be finite");
    if (!(epsilon >= 0.0)) throw invalid_argument("objective: epsilon must be >= 0");
}

double path_objective(std::span<const double> times, std::span<const double> wealth,
                      std::span<const double> benchmark, const objective_spec& spec, double dt)
{
    if (times.size() != wealth.size() || wealth.size() != benchmark.size() || wealth.empty())
        throw invalid_argument("path_objective: inconsistent trajectory lengths");
    const double wt = spec.term_weight(dt);
    double sum = 0.0;
    for (std::size_t j = 0; j < wealth.size(); ++j) {
        double d = wealth[j] - std::exp(spec.beta * times[j]) * benchmark[j];
        if (spec.kind == objective_kind::cs) d = std::min(d, 0.0);
        sum += wt * d * d;
    }
    if (spec.kind == objective_kind::cs) sum += spec.epsilon * wealth.back();
    return sum;
}

double path_objective(const trajectory& tr, const objective_spec& spec, double dt)
{
    return path_objective(tr.times, tr.wealth, tr.benchmark, spec, dt);
}

double strategy_objective(const trajectory_set& set, const objective_spec& spec, double dt)
{
    if (set.n_paths == 0) throw invalid_argument("strategy_objective: no paths");
    double sum = 0.0;
    for (std::size_t s = 0; s < set.n_paths; ++s) {
        const std::span<const double> w(set.wealth.data() + s * set.n_dates, set.n_dates);
        const std::span<const double> b(set.benchmark.data() + s * set.n_dates, set.n_dates);
        sum += path_objective(set.times, w, b, spec, dt);
    }
    return sum / static_cast<double>(set.n_paths);
}

namespace {

void check_dimensions(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                      const investment_scenario& scenario)
{
    scenario.validate();
    if (theta.size() != net.n_params()) throw invalid_argument("theta length does not match the network");
    if (net.config().n_assets != scenario.n_assets() || net.config().n_long != scenario.n_long)
        throw invalid_argument("network asset layout does not match the investment scenario");
    if (scenarios.n_periods != scenario.n_periods() || scenarios.n_assets != scenario.n_assets())
        throw invalid_argument("scenario set dimensions do not match the investment scenario");
}

std::size_t selected(std::span<const std::size_t> indices, std::size_t k)
{
    return indices[k];
}

} // namespace

double empirical_loss(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                      const investment_scenario& scenario, const objective_spec& spec,
                      std::span<const std::size_t> indices, int threads)
{
    check_dimensions(net, theta, scenarios, scenario);
    spec.validate();
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(scenarios.n_scenarios);
        for (std::size_t s = 0; s < all.size(); ++s) all[s] = s;
        indices = all;
    }
    if (indices.empty()) throw invalid_argument("empirical_loss: no scenarios");
    std::vector<double> per_path(indices.size());
    parallel::for_each_index(indices.size(), threads, [&](std::size_t k) {
        auto ws = net.make_workspace();
        const policy_fn policy = [&](double t, double w, double w_hat, std::span<double> p) {
            net.allocate(theta, t, w, w_hat, p, ws);
        };
        const auto tr = run_policy(policy, scenario, scenarios.path(selected(indices, k)));
        per_path[k] = path_objective(tr, spec, scenario.dt);
    });
    double sum = 0.0;
    for (double v : per_path) sum += v;
    return sum / static_cast<double>(indices.size());
}

double path_loss_gradient(const lfnn& net, std::span<const double> theta, std::span<const double> path,
                          const investment_scenario& scenario, const objective_spec& spec, std::span<double> grad,
                          lfnn_workspace& ws)
{
    const std::size_t n = scenario.n_periods();
    const std::size_t na = scenario.n_assets();
    const std::size_t nl = scenario.n_long;
    const double c = scenario.injection_per_period();
    const double premium = scenario.premium_per_period();
    const double wt = spec.term_weight(scenario.dt);
    const bool cs = spec.kind == objective_kind::cs;

    std::vector<double> w(n + 1);
    std::vector<double> w_hat(n + 1);
    std::vector<double> p(n * na);
    std::vector<unsigned char> solvent(n, 0);
    const std::size_t tape_n = net.tape_size();
    std::vector<double> tape(n * tape_n);
    w[0] = scenario.w0;
    w_hat[0] = scenario.w0;
    bool insolvent = false;
    for (std::size_t j = 0; j < n; ++j) {
        auto pj = std::span<double>(p).subspan(j * na, na);
        if (w[j] < 0.0) insolvent = true;
        if (insolvent) {
            std::fill(pj.begin(), pj.end(), 0.0);
            pj[nl] = 1.0;
        } else {
            solvent[j] = 1;
            net.allocate(theta, scenario.time(j), w[j], w_hat[j], pj, ws);
            net.store_tape(ws, std::span<double>(tape).subspan(j * tape_n, tape_n));
        }
        const auto r = path.subspan(j * na, na);
        w[j + 1] = step_wealth(w[j], pj, r, c, premium, nl);
        w_hat[j + 1] = step_wealth(w_hat[j], scenario.benchmark_weights, r, c, 0.0, nl);
    }

    // Local derivative of the objective with respect to W(t_j).
    auto local = [&](std::size_t j, double& loss) {
        double d = w[j] - std::exp(spec.beta * scenario.time(j)) * w_hat[j];
        if (cs) d = std::min(d, 0.0);
        loss += wt * d * d;
        return 2.0 * wt * d;
    };

    double loss = 0.0;
    double adj = local(n, loss);
    if (cs) {
        loss += spec.epsilon * w[n];
        adj += spec.epsilon;
    }
    std::vector<double> r_eff(na);
    std::vector<double> d_alloc(na);
    for (std::size_t j = n; j-- > 0;) {
        const auto pj = std::span<const double>(p).subspan(j * na, na);
        const auto r = path.subspan(j * na, na);
        double growth = 0.0;
        for (std::size_t i = 0; i < na; ++i) {
            r_eff[i] = r[i] + ((i >= nl && pj[i] < 0.0) ? premium : 0.0);
            growth += pj[i] * r_eff[i];
        }
        double next = adj * (1.0 + growth);
        if (solvent[j]) {
            for (std::size_t i = 0; i < na; ++i) d_alloc[i] = adj * w[j] * r_eff[i];
            net.load_tape(std::span<const double>(tape).subspan(j * tape_n, tape_n), ws);
            next += net.backward(theta, d_alloc, grad, ws);
        }
        adj = next + local(j, loss);
    }
    return loss;
}

loss_and_gradient loss_gradient(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                                const investment_scenario& scenario, const objective_spec& spec,
                                std::span<const std::size_t> indices, int threads)
{
    check_dimensions(net, theta, scenarios, scenario);
    spec.validate();
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(scenarios.n_scenarios);
        for (std::size_t s = 0; s < all.size(); ++s) all[s] = s;
        indices = all;
    }
    if (indices.empty()) throw invalid_argument("loss_gradient: no scenarios");
    const std::size_t np = net.n_params();
    const std::size_t m = indices.size();
    std::vector<double> per_path_loss(m);
    std::vector<double> per_path_grad(m * np, 0.0);
    parallel::for_each_index(m, threads, [&](std::size_t k) {
        auto ws = net.make_workspace();
        per_path_loss[k] = path_loss_gradient(net, theta, scenarios.path(selected(indices, k)), scenario, spec,
                                              std::span<double>(per_path_grad).subspan(k * np, np), ws);
    });
    loss_and_gradient out;
    out.gradient.assign(np, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        out.loss += per_path_loss[k];
        const double* g = per_path_grad.data() + k * np;
        for (std::size_t i = 0; i < np; ++i) {
            if (!std::isfinite(g[i])) {
                std::ostringstream os;
                os << "non-finite gradient for scenario " << indices[k] << " (parameter " << i << ")";
                throw numeric_error(os.str());
            }
            out.gradient[i] += g[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(m);
    out.loss *= inv;
    for (double& g : out.gradient) g *= inv;
    return out;
}

void adam_options::validate() const
{
    if (!(learning_rate > 0.0)) throw invalid_argument("adam: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw invalid_argument("adam: betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw invalid_argument("adam: epsilon must be positive");
}

adam::adam(std::size_t n, adam_options options) : opt_(options), m_(n, 0.0), v_(n, 0.0)
{
    opt_.validate();
}

void adam::step(std::span<double> x, std::span<const double> g)
{
    if (x.size() != m_.size() || g.size() != m_.size()) throw invalid_argument("adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
        m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g[i];
        v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g[i] * g[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        x[i] -= opt_.learning_rate * m_hat / (std::sqrt(v_hat) + opt_.epsilon);
    }
}

std::vector<double> adam_minimize(const std::function<double(std::span<const double>, std::span<double>)>& f,
                                  std::vector<double> x0, const adam_options& options, std::size_t iterations)
{
    adam opt(x0.size(), options);
    std::vector<double> g(x0.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(g.begin(), g.end(), 0.0);
        const double v = f(x0, g);
        if (!std::isfinite(v)) throw numeric_error("adam_minimize: objective is not finite");
        opt.step(x0, g);
    }
    return x0;
}

void train_config::validate(std::size_t n_scenarios) const
{
    adam.validate();
    if (iterations == 0) throw invalid_argument("train: iterations must be positive");
    if (batch_size == 0) throw invalid_argument("train: minibatch size must be positive");
    if (batch_size > n_scenarios) throw invalid_argument("train: minibatch size exceeds the number of scenarios");
    if (!(gradient_clip >= 0.0)) throw invalid_argument("train: gradient clip must be >= 0");
}

std::vector<std::size_t> minibatch_indices(std::uint64_t seed, std::uint64_t iteration, std::size_t n_scenarios,
                                           std::size_t batch_size)
{
    auto rng = substream(seed, stream_domain::minibatch, iteration);
    std::uniform_int_distribution<std::size_t> pick(0, n_scenarios - 1);
    std::vector<std::size_t> out(batch_size);
    for (auto& i : out) i = pick(rng);
    return out;
}

train_result train(const policy_theta& initial, const scenario_set& scenarios, const investment_scenario& scenario,
                   const objective_spec& spec, const train_config& config,
                   const std::function<void(const eval_point&)>& progress)
{
    initial.validate();
    config.validate(scenarios.n_scenarios);
    const lfnn net(initial.arch);
    const double scale = 1.0 / (scenario.w0 * scenario.w0);

    train_result result;
    result.theta = initial;
    result.best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> theta = initial.values;
    adam opt(theta.size(), config.adam);
    std::vector<double> g(theta.size());

    auto evaluate = [&](std::size_t iteration) {
        const double loss = empirical_loss(net, theta, scenarios, scenario, spec, {}, config.threads);
        if (!std::isfinite(loss)) {
            std::ostringstream os;
            os << "training diverged: full loss is not finite at iteration " << iteration;
            throw divergence_error(os.str(), result.history);
        }
        result.history.evaluations.push_back({iteration, loss});
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.best_iteration = iteration;
            result.theta.values = theta;
        }
        if (progress) progress(result.history.evaluations.back());
    };

    evaluate(0);
    result.history.batch_loss.reserve(config.iterations);
    for (std::size_t it = 1; it <= config.iterations; ++it) {
        const auto batch = minibatch_indices(config.seed, it, scenarios.n_scenarios, config.batch_size);
        auto lg = loss_gradient(net, theta, scenarios, scenario, spec, batch, config.threads);
        if (!std::isfinite(lg.loss)) {
            std::ostringstream os;
            os << "training diverged: minibatch loss is not finite at iteration " << it;
            throw divergence_error(os.str(), result.history);
        }
        result.history.batch_loss.push_back(lg.loss);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = lg.gradient[i] * scale;
        if (config.gradient_clip > 0.0) {
            double norm = 0.0;
            for (double v : g) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > config.gradient_clip)
                for (double& v : g) v *= config.gradient_clip / norm;
        }
        opt.step(theta, g);
        if ((config.eval_every > 0 && it % config.eval_every == 0) || it == config.iterations) evaluate(it);
    }
    return result;
}

void write_loss_history(const std::filesystem::path& path, const train_history& history)
{
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out.precision(17);
    out << "iteration,batch_loss,full_loss\n";
    std::size_t e = 0;
    for (std::size_t it = 0; it <= history.batch_loss.size(); ++it) {
        const bool has_eval = e < history.evaluations.size() && history.evaluations[e].iteration == it;
        if (it == 0 && !has_eval) continue;
        out << it << ',';
        if (it > 0) out << history.batch_loss[it - 1];
        out << ',';
        if (has_eval) out << history.evaluations[e++].loss;
        out << '\n';
    }
}

} // namespace outperform
