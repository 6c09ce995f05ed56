#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace outperform {

/// Architecture of the leverage-feasible network. Assets 0..n_long-1 are
/// long-only; the remaining ones are shortable. Inputs are (t, W, W_hat),
/// scaled to (t / horizon, W / w0, W_hat / w0) before the first layer.
struct lfnn_config {
    std::size_t n_assets = 2;
    std::size_t n_long = 1;
    double p_max = 1.3;
    std::vector<std::size_t> hidden{10};
    double horizon = 10.0;
    double w0 = 100.0;

    static constexpr std::size_t n_inputs = 3;
    std::size_t n_outputs() const { return n_assets + 1; }
    std::size_t n_params() const;
    void validate() const;

    bool operator==(const lfnn_config&) const = default;
};

/// Flattened parameters. For each hidden layer k: its weight matrix
/// (row-major, out x in) followed by its bias vector; then the output weight
/// matrix ((n_assets + 1) x last hidden width) with no bias.
struct policy_theta {
    lfnn_config arch;
    std::vector<double> values;

    void validate() const;
};

/// Weights uniform in [-0.5/sqrt(fan_in), 0.5/sqrt(fan_in)], biases zero.
policy_theta initial_theta(const lfnn_config& arch, std::uint64_t seed);

/// Scratch space for one forward/backward evaluation. Not shared between threads.
struct lfnn_workspace {
    std::vector<std::vector<double>> activations; // [0] = scaled input, [k] = hidden layer k
    std::vector<double> output;                   // raw network output o
    std::vector<double> z;                        // zeta(o)
    std::vector<double> delta;
    std::vector<double> delta_prev;
    std::vector<double> d_output;
};

class lfnn {
public:
    explicit lfnn(lfnn_config config);

    const lfnn_config& config() const { return config_; }
    std::size_t n_params() const { return config_.n_params(); }

    lfnn_workspace make_workspace() const;

    std::array<double, 3> features(double t, double w, double w_hat) const
    {
        return {t / config_.horizon, w / config_.w0, w_hat / config_.w0};
    }

    /// Sigmoid hidden layers and a bias-free linear output layer.
    void fnn_forward(std::span<const double> x, std::span<const double> theta, lfnn_workspace& ws) const;

    /// (softmax of the long block, softmax of the shortable block, p_max * sigmoid(last)).
    void zeta(std::span<const double> o, std::span<double> z) const;

    /// Maps z to allocations; wealth < 0 gives all weight to the first shortable asset.
    void varphi(std::span<const double> z, double wealth, std::span<double> p) const;

    /// Full policy at state (t, w, w_hat); leaves activations in `ws` for `backward`.
    void allocate(std::span<const double> theta, double t, double w, double w_hat, std::span<double> p,
                  lfnn_workspace& ws) const;

    /// Given dL/dp at the point of the last `allocate` (solvent branch),
    /// accumulates dL/dtheta into `grad` and returns dL/dW.
    double backward(std::span<const double> theta, std::span<const double> d_alloc, std::span<double> grad,
                    lfnn_workspace& ws) const;

    /// Doubles needed to snapshot what `backward` reads from a workspace
    /// (all layer activations and z), so a forward sweep can be replayed
    /// without re-evaluating the network.
    std::size_t tape_size() const;
    void store_tape(const lfnn_workspace& ws, std::span<double> tape) const;
    void load_tape(std::span<const double> tape, lfnn_workspace& ws) const;

private:
    lfnn_config config_;
    std::vector<std::size_t> offsets_; // start of each layer's block; last entry is the output layer
};

double sigmoid(double x);

void save_checkpoint(const std::filesystem::path& path, const policy_theta& theta, std::uint64_t iteration);
policy_theta load_checkpoint(const std::filesystem::path& path, std::uint64_t* iteration = nullptr);

} // namespace outperform
