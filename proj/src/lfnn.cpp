#include "outperform/lfnn.hpp"

#include "outperform/error.hpp"
#include "outperform/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace outperform {

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::size_t lfnn_config::n_params() const
{
    std::size_t n = 0;
    std::size_t fan_in = n_inputs;
    for (std::size_t width : hidden) {
        n += width * fan_in + width;
        fan_in = width;
    }
    return n + n_outputs() * fan_in;
}

void lfnn_config::validate() const
{
    if (!(n_long >= 1 && n_long < n_assets)) throw invalid_argument("lfnn: need 1 <= n_long < n_assets");
    if (!(p_max >= 1.0)) throw invalid_argument("lfnn: p_max must be >= 1");
    if (hidden.empty()) throw invalid_argument("lfnn: at least one hidden layer is required");
    for (std::size_t w : hidden) {
        if (w == 0) throw invalid_argument("lfnn: hidden widths must be positive");
    }
    if (!(horizon > 0.0) || !(w0 > 0.0)) throw invalid_argument("lfnn: feature scales must be positive");
}

void policy_theta::validate() const
{
    arch.validate();
    if (values.size() != arch.n_params())
        throw invalid_argument("policy theta: length " + std::to_string(values.size()) +
                               " does not match architecture (" + std::to_string(arch.n_params()) + ")");
    for (double v : values) {
        if (!std::isfinite(v)) throw invalid_argument("policy theta: non-finite entry");
    }
}

policy_theta initial_theta(const lfnn_config& arch, std::uint64_t seed)
{
    arch.validate();
    policy_theta theta{arch, {}};
    theta.values.reserve(arch.n_params());
    auto rng = substream(seed, stream_domain::init, 0);
    std::size_t fan_in = lfnn_config::n_inputs;
    auto fill_weights = [&](std::size_t rows, std::size_t cols) {
        const double bound = 0.5 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < rows * cols; ++i) theta.values.push_back(u(rng));
    };
    for (std::size_t width : arch.hidden) {
        fill_weights(width, fan_in);
        theta.values.insert(theta.values.end(), width, 0.0);
        fan_in = width;
    }
    fill_weights(arch.n_outputs(), fan_in);
    return theta;
}

lfnn::lfnn(lfnn_config config) : config_(std::move(config))
{
    config_.validate();
    std::size_t off = 0;
    std::size_t fan_in = lfnn_config::n_inputs;
    for (std::size_t width : config_.hidden) {
        offsets_.push_back(off);
        off += width * fan_in + width;
        fan_in = width;
    }
    offsets_.push_back(off);
}

lfnn_workspace lfnn::make_workspace() const
{
    lfnn_workspace ws;
    ws.activations.emplace_back(lfnn_config::n_inputs);
    std::size_t widest = lfnn_config::n_inputs;
    for (std::size_t w : config_.hidden) {
        ws.activations.emplace_back(w);
        widest = std::max(widest, w);
    }
    ws.output.resize(config_.n_outputs());
    ws.z.resize(config_.n_outputs());
    ws.delta.resize(widest);
    ws.delta_prev.resize(widest);
    ws.d_output.resize(config_.n_outputs());
    return ws;
}

std::size_t lfnn::tape_size() const
{
    std::size_t n = lfnn_config::n_inputs + config_.n_outputs();
    for (std::size_t w : config_.hidden) n += w;
    return n;
}

void lfnn::store_tape(const lfnn_workspace& ws, std::span<double> tape) const
{
    auto out = tape.begin();
    for (const auto& a : ws.activations) out = std::copy(a.begin(), a.end(), out);
    std::copy(ws.z.begin(), ws.z.end(), out);
}

void lfnn::load_tape(std::span<const double> tape, lfnn_workspace& ws) const
{
    auto in = tape.begin();
    for (auto& a : ws.activations) {
        std::copy(in, in + static_cast<std::ptrdiff_t>(a.size()), a.begin());
        in += static_cast<std::ptrdiff_t>(a.size());
    }
    std::copy(in, in + static_cast<std::ptrdiff_t>(ws.z.size()), ws.z.begin());
}

void lfnn::fnn_forward(std::span<const double> x, std::span<const double> theta, lfnn_workspace& ws) const
{
    if (theta.size() != config_.n_params()) throw invalid_argument("lfnn: parameter vector does not match architecture");
    if (x.size() != lfnn_config::n_inputs) throw invalid_argument("lfnn: expected three input features");
    std::copy(x.begin(), x.end(), ws.activations[0].begin());
    const double* p = theta.data();
    for (std::size_t k = 0; k < config_.hidden.size(); ++k) {
        const auto& in = ws.activations[k];
        auto& out = ws.activations[k + 1];
        const std::size_t n_in = in.size();
        const double* bias = p + out.size() * n_in;
        for (std::size_t j = 0; j < out.size(); ++j) {
            double s = bias[j];
            const double* row = p + j * n_in;
            for (std::size_t i = 0; i < n_in; ++i) s += row[i] * in[i];
            out[j] = sigmoid(s);
        }
        p = bias + out.size();
    }
    const auto& last = ws.activations.back();
    for (std::size_t j = 0; j < ws.output.size(); ++j) {
        double s = 0.0;
        const double* row = p + j * last.size();
        for (std::size_t i = 0; i < last.size(); ++i) s += row[i] * last[i];
        ws.output[j] = s;
    }
}

namespace {

void softmax(std::span<const double> in, std::span<double> out)
{
    const double m = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = std::exp(in[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
}

} // namespace

void lfnn::zeta(std::span<const double> o, std::span<double> z) const
{
    const std::size_t nl = config_.n_long;
    const std::size_t na = config_.n_assets;
    softmax(o.subspan(0, nl), z.subspan(0, nl));
    softmax(o.subspan(nl, na - nl), z.subspan(nl, na - nl));
    z[na] = config_.p_max * sigmoid(o[na]);
}

void lfnn::varphi(std::span<const double> z, double wealth, std::span<double> p) const
{
    const std::size_t nl = config_.n_long;
    const std::size_t na = config_.n_assets;
    if (wealth < 0.0) {
        std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
        p[nl] = 1.0;
        return;
    }
    const double lev = z[na];
    for (std::size_t i = 0; i < nl; ++i) p[i] = lev * z[i];
    for (std::size_t i = nl; i < na; ++i) p[i] = (1.0 - lev) * z[i];
}

void lfnn::allocate(std::span<const double> theta, double t, double w, double w_hat, std::span<double> p,
                    lfnn_workspace& ws) const
{
    const auto x = features(t, w, w_hat);
    fnn_forward(x, theta, ws);
    zeta(ws.output, ws.z);
    varphi(ws.z, w, p);
}

double lfnn::backward(std::span<const double> theta, std::span<const double> d_alloc, std::span<double> grad,
                      lfnn_workspace& ws) const
{
    const std::size_t nl = config_.n_long;
    const std::size_t na = config_.n_assets;
    const auto& z = ws.z;
    const double lev = z[na];
    auto& d_o = ws.d_output;

    // Through varphi and zeta.
    double d_lev = 0.0;
    for (std::size_t i = 0; i < nl; ++i) d_lev += d_alloc[i] * z[i];
    for (std::size_t i = nl; i < na; ++i) d_lev -= d_alloc[i] * z[i];
    double dot = 0.0;
    for (std::size_t i = 0; i < nl; ++i) dot += z[i] * lev * d_alloc[i];
    for (std::size_t i = 0; i < nl; ++i) d_o[i] = z[i] * (lev * d_alloc[i] - dot);
    dot = 0.0;
    for (std::size_t i = nl; i < na; ++i) dot += z[i] * (1.0 - lev) * d_alloc[i];
    for (std::size_t i = nl; i < na; ++i) d_o[i] = z[i] * ((1.0 - lev) * d_alloc[i] - dot);
    const double s = lev / config_.p_max;
    d_o[na] = d_lev * config_.p_max * s * (1.0 - s);

    const std::size_t n_layers = config_.hidden.size();
    const auto& offsets = offsets_;

    // Output layer.
    const auto& last = ws.activations.back();
    const std::size_t n_last = last.size();
    {
        const double* w = theta.data() + offsets[n_layers];
        double* gw = grad.data() + offsets[n_layers];
        std::fill(ws.delta.begin(), ws.delta.begin() + static_cast<std::ptrdiff_t>(n_last), 0.0);
        for (std::size_t j = 0; j < d_o.size(); ++j) {
            const double dj = d_o[j];
            for (std::size_t i = 0; i < n_last; ++i) {
                gw[j * n_last + i] += dj * last[i];
                ws.delta[i] += w[j * n_last + i] * dj;
            }
        }
    }

    // Hidden layers, last to first. ws.delta holds dL/dh for layer k + 1.
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& out = ws.activations[k + 1];
        const auto& in = ws.activations[k];
        const std::size_t n_out = out.size();
        const std::size_t n_in = in.size();
        const double* w = theta.data() + offsets[k];
        double* gw = grad.data() + offsets[k];
        double* gb = gw + n_out * n_in;
        std::fill(ws.delta_prev.begin(), ws.delta_prev.begin() + static_cast<std::ptrdiff_t>(n_in), 0.0);
        for (std::size_t j = 0; j < n_out; ++j) {
            const double da = ws.delta[j] * out[j] * (1.0 - out[j]);
            gb[j] += da;
            for (std::size_t i = 0; i < n_in; ++i) {
                gw[j * n_in + i] += da * in[i];
                ws.delta_prev[i] += w[j * n_in + i] * da;
            }
        }
        std::swap(ws.delta, ws.delta_prev);
    }
    // ws.delta now holds dL/dx for the scaled features; W enters as W / w0.
    return ws.delta[1] / config_.w0;
}

void save_checkpoint(const std::filesystem::path& path, const policy_theta& theta, std::uint64_t iteration)
{
    theta.validate();
    nlohmann::json j;
    j["architecture"] = {
        {"n_assets", theta.arch.n_assets}, {"n_long", theta.arch.n_long}, {"p_max", theta.arch.p_max},
        {"hidden", theta.arch.hidden},     {"horizon", theta.arch.horizon}, {"w0", theta.arch.w0},
    };
    j["n_params"] = theta.values.size();
    j["iteration"] = iteration;
    j["theta"] = theta.values;
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

policy_theta load_checkpoint(const std::filesystem::path& path, std::uint64_t* iteration)
{
    std::ifstream in(path);
    if (!in) throw ingestion_error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        policy_theta theta;
        const auto& a = j.at("architecture");
        theta.arch.n_assets = a.at("n_assets").get<std::size_t>();
        theta.arch.n_long = a.at("n_long").get<std::size_t>();
        theta.arch.p_max = a.at("p_max").get<double>();
        theta.arch.hidden = a.at("hidden").get<std::vector<std::size_t>>();
        theta.arch.horizon = a.at("horizon").get<double>();
        theta.arch.w0 = a.at("w0").get<double>();
        theta.values = j.at("theta").get<std::vector<double>>();
        if (iteration) *iteration = j.value("iteration", std::uint64_t{0});
        theta.validate();
        return theta;
    } catch (const nlohmann::json::exception& e) {
        throw ingestion_error(path.string() + ": " + e.what());
    }
}

} // namespace outperform
