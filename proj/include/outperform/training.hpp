#pragma once

#include "outperform/backtest.hpp"
#include "outperform/error.hpp"
#include "outperform/lfnn.hpp"
#include "outperform/scenario_set.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace outperform {

enum class objective_kind { cd, cs };

/// How each date's squared term is weighted. `dt` multiplies every term by the
/// rebalancing interval (a Riemann sum of the running cost, which keeps values
/// comparable across rebalancing frequencies); `unit` is the plain sum.
enum class objective_weighting { dt, unit };

std::string to_string(objective_kind k);
objective_kind objective_kind_from_string(const std::string& s);
std::string to_string(objective_weighting w);
objective_weighting objective_weighting_from_string(const std::string& s);

struct objective_spec {
    objective_kind kind = objective_kind::cd;
    double beta = 0.01;
    double epsilon = 1e-4; // CS only, multiplies W(T)
    objective_weighting weighting = objective_weighting::dt;

    double term_weight(double dt) const { return weighting == objective_weighting::dt ? dt : 1.0; }
    void validate() const;
};

/// Sum over t_0..t_N of (W - e^{beta t} W_hat)^2 (CD) or of its squared
/// negative part plus epsilon W(T) (CS).
double path_objective(std::span<const double> times, std::span<const double> wealth,
                      std::span<const double> benchmark, const objective_spec& spec, double dt);
double path_objective(const trajectory& tr, const objective_spec& spec, double dt);

/// Per-path mean, summed in path order.
double strategy_objective(const trajectory_set& set, const objective_spec& spec, double dt);

/// Mean objective of the LFNN policy over the selected scenarios (all when
/// `indices` is empty).
double empirical_loss(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                      const investment_scenario& scenario, const objective_spec& spec,
                      std::span<const std::size_t> indices = {}, int threads = 0);

struct loss_and_gradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Loss of one path and its gradient, accumulated into `grad`. Reverse sweep
/// through the wealth recursion, replaying the network activations taped on
/// the forward sweep.
double path_loss_gradient(const lfnn& net, std::span<const double> theta, std::span<const double> path,
                          const investment_scenario& scenario, const objective_spec& spec, std::span<double> grad,
                          lfnn_workspace& ws);

/// Mean loss and its exact gradient. Per-path gradients are reduced in
/// scenario order, so the result does not depend on the thread count.
loss_and_gradient loss_gradient(const lfnn& net, std::span<const double> theta, const scenario_set& scenarios,
                                const investment_scenario& scenario, const objective_spec& spec,
                                std::span<const std::size_t> indices = {}, int threads = 0);

struct adam_options {
    double learning_rate = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

class adam {
public:
    adam(std::size_t n, adam_options options);

    /// One bias-corrected update of `x` from gradient `g`.
    void step(std::span<double> x, std::span<const double> g);
    std::uint64_t iterations() const { return t_; }

private:
    adam_options opt_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

/// Plain ADAM loop on f(x) -> value, writing the gradient to its second argument.
std::vector<double> adam_minimize(const std::function<double(std::span<const double>, std::span<double>)>& f,
                                  std::vector<double> x0, const adam_options& options, std::size_t iterations);

struct train_config {
    adam_options adam;
    std::size_t iterations = 20000;
    std::size_t batch_size = 1000;
    std::uint64_t seed = 0;
    double gradient_clip = 0.0; // max gradient 2-norm, 0 disables
    /// Full training-set loss is evaluated every `eval_every` iterations and
    /// at the end; the best evaluated theta is returned. 0 means only at the end.
    std::size_t eval_every = 500;
    int threads = 0;

    void validate(std::size_t n_scenarios) const;
};

struct eval_point {
    std::size_t iteration = 0;
    double loss = 0.0;
};

struct train_history {
    std::vector<double> batch_loss; // per iteration, reporting scale
    std::vector<eval_point> evaluations;
};

struct train_result {
    policy_theta theta;
    double best_loss = 0.0;
    std::size_t best_iteration = 0;
    train_history history;
};

class divergence_error : public numeric_error {
public:
    divergence_error(const std::string& what, train_history history)
        : numeric_error(what), history_(std::move(history))
    {}
    const train_history& history() const { return history_; }

private:
    train_history history_;
};

/// Minibatch for iteration `iteration`: `batch_size` uniform draws (with
/// replacement) from the scenario indices, from its own sub-stream.
std::vector<std::size_t> minibatch_indices(std::uint64_t seed, std::uint64_t iteration, std::size_t n_scenarios,
                                           std::size_t batch_size);

/// ADAM on the w0^2-normalized loss. `progress` (optional) is called after
/// every full evaluation.
train_result train(const policy_theta& initial, const scenario_set& scenarios, const investment_scenario& scenario,
                   const objective_spec& spec, const train_config& config,
                   const std::function<void(const eval_point&)>& progress = {});

void write_loss_history(const std::filesystem::path& path, const train_history& history);

} // namespace outperform
