#include "outperform/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <type_traits>
#include <sstream>

namespace outperform {

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_plain_double(std::string_view s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

// Accepts "0.25" as well as "1/12".
std::optional<double> parse_double(std::string_view s)
{
    const auto text = trim(s);
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_plain_double(text);
    const auto num = parse_plain_double(trim(std::string_view(text).substr(0, slash)));
    const auto den = parse_plain_double(trim(std::string_view(text).substr(slash + 1)));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s)
{
    const auto text = trim(s);
    Int v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

std::optional<bool> parse_bool(std::string_view s)
{
    const auto t = trim(s);
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    return std::nullopt;
}

using section_map = std::map<std::string, std::map<std::string, std::string>>;

// Reads keys out of one section and records anything it cannot use.
class section_reader {
public:
    section_reader(const section_map& all, std::string name, std::vector<std::string>& problems)
        : name_(std::move(name)), problems_(problems)
    {
        if (const auto it = all.find(name_); it != all.end()) values_ = &it->second;
    }

    ~section_reader()
    {
        if (values_ == nullptr) return;
        for (const auto& [k, v] : *values_)
            if (!used_.contains(k)) problems_.push_back("[" + name_ + "] unknown key '" + k + "'");
    }

    bool present() const { return values_ != nullptr; }

    void read(const char* key, double& out)
    {
        if (const auto* raw = find(key)) {
            if (const auto v = parse_double(*raw)) out = *v;
            else bad(key, *raw, "a number");
        }
    }
    template <class U>
        requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
    void read(const char* key, U& out)
    {
        if (const auto* raw = find(key)) {
            if (const auto v = parse_int<U>(*raw)) out = *v;
            else bad(key, *raw, "a non-negative integer");
        }
    }
    void read(const char* key, int& out)
    {
        if (const auto* raw = find(key)) {
            if (const auto v = parse_int<int>(*raw)) out = *v;
            else bad(key, *raw, "an integer");
        }
    }
    void read(const char* key, bool& out)
    {
        if (const auto* raw = find(key)) {
            if (const auto v = parse_bool(*raw)) out = *v;
            else bad(key, *raw, "true or false");
        }
    }
    void read(const char* key, std::string& out)
    {
        if (const auto* raw = find(key)) out = trim(*raw);
    }
    void read(const char* key, std::vector<double>& out)
    {
        if (const auto* raw = find(key)) {
            std::vector<double> v;
            for (const auto& item : split_list(*raw)) {
                if (const auto d = parse_double(item)) v.push_back(*d);
                else return bad(key, *raw, "a comma-separated list of numbers");
            }
            out = std::move(v);
        }
    }
    void read(const char* key, std::vector<std::size_t>& out)
    {
        if (const auto* raw = find(key)) {
            std::vector<std::size_t> v;
            for (const auto& item : split_list(*raw)) {
                if (const auto d = parse_int<std::size_t>(item)) v.push_back(*d);
                else return bad(key, *raw, "a comma-separated list of integers");
            }
            out = std::move(v);
        }
    }
    void read(const char* key, std::vector<std::string>& out)
    {
        if (const auto* raw = find(key)) out = split_list(*raw);
    }

    void bad(const char* key, const std::string& raw, const char* expected)
    {
        problems_.push_back("[" + name_ + "] " + key + " = '" + raw + "' is not " + expected);
    }

private:
    const std::string* find(const char* key)
    {
        if (values_ == nullptr) return nullptr;
        const auto it = values_->find(key);
        if (it == values_->end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    std::string name_;
    std::vector<std::string>& problems_;
    const std::map<std::string, std::string>* values_ = nullptr;
    std::set<std::string> used_;
};

template <class F>
void check(std::vector<std::string>& problems, const std::string& where, F&& validate_fn)
{
    try {
        validate_fn();
    } catch (const std::exception& e) {
        problems.push_back(where + ": " + e.what());
    }
}

std::string file_digest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) return "unreadable";
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

} // namespace

config_error::config_error(std::vector<std::string> problems)
    : invalid_argument("invalid configuration:\n  " + join(problems, "\n  ")), problems_(std::move(problems))
{}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw error("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

experiment_config parse_config(std::string_view ini_text, const std::filesystem::path& base_dir)
{
    boost::property_tree::ptree tree;
    try {
        std::istringstream in{std::string(ini_text)};
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
    }
    // Walk children directly; section names may contain '.'.
    section_map sections;
    std::vector<std::string> problems;
    for (const auto& [name, section] : tree) {
        if (section.empty()) {
            problems.push_back("key '" + name + "' outside of any section");
            continue;
        }
        for (const auto& [key, value] : section) sections[name][key] = value.data();
    }

    experiment_config cfg;
    static const std::set<std::string> known{"experiment", "data",      "filter",   "scenarios",  "market",
                                             "investment", "objective", "network",  "training",   "closed_form"};
    for (const auto& [name, values] : sections)
        if (!known.contains(name) && !name.starts_with("asset."))
            problems.push_back("unknown section [" + name + "]");

    {
        section_reader r(sections, "experiment", problems);
        r.read("name", cfg.name);
        r.read("seed", cfg.seed);
        std::string out;
        r.read("output", out);
        if (!out.empty()) cfg.output = out;
        r.read("threads", cfg.threads);
    }
    {
        section_reader r(sections, "data", problems);
        std::string csv;
        r.read("returns_csv", csv);
        if (!csv.empty()) {
            std::filesystem::path p(csv);
            cfg.data.returns_csv = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        }
        r.read("columns", cfg.data.columns);
        r.read("deflate", cfg.data.deflate);
    }
    {
        section_reader r(sections, "filter", problems);
        r.read("enabled", cfg.filter.enabled);
        r.read("window_months", cfg.filter.window_months);
        r.read("cutoff", cfg.filter.cutoff);
    }
    {
        section_reader r(sections, "scenarios", problems);
        std::string source;
        r.read("source", source);
        if (source == "bootstrap") cfg.scenarios.source = scenario_source::bootstrap;
        else if (source == "simulate" || source.empty()) cfg.scenarios.source = scenario_source::simulate;
        else r.bad("source", source, "simulate or bootstrap");
        r.read("n_train", cfg.scenarios.n_train);
        r.read("n_test", cfg.scenarios.n_test);
        r.read("expected_blocksize", cfg.scenarios.expected_blocksize);
        r.read("per_segment", cfg.scenarios.per_segment);
    }
    {
        section_reader r(sections, "market", problems);
        std::string preset = "calibrated";
        r.read("preset", preset);
        std::vector<std::string> names;
        r.read("assets", names);
        r.read("rho", cfg.market.rho);
        if (preset == "custom") {
            if (names.empty()) problems.push_back("[market] preset = custom needs an 'assets' list");
            cfg.market.assets.clear();
            for (const auto& n : names) {
                asset_jump_params a;
                a.name = n;
                section_reader ar(sections, "asset." + n, problems);
                if (!ar.present()) problems.push_back("[market] asset '" + n + "' has no [asset." + n + "] section");
                ar.read("mu", a.mu);
                ar.read("sigma", a.sigma);
                ar.read("lambda", a.lambda);
                ar.read("nu", a.nu);
                ar.read("iota", a.iota);
                ar.read("varsigma", a.varsigma);
                cfg.market.assets.push_back(a);
            }
        } else if (preset != "calibrated") {
            r.bad("preset", preset, "calibrated or custom");
        } else if (!names.empty()) {
            problems.push_back("[market] 'assets' is only used with preset = custom");
        }
    }
    {
        section_reader r(sections, "investment", problems);
        auto& s = cfg.investment;
        r.read("T", s.T);
        r.read("dt", s.dt);
        r.read("w0", s.w0);
        r.read("annual_injection", s.annual_injection);
        r.read("benchmark_weights", s.benchmark_weights);
        r.read("p_max", s.p_max);
        r.read("borrow_premium", s.borrow_premium);
        r.read("n_long", s.n_long);
    }
    {
        section_reader r(sections, "objective", problems);
        std::string kind;
        std::string weighting;
        r.read("kind", kind);
        r.read("weighting", weighting);
        r.read("beta", cfg.objective.beta);
        r.read("epsilon", cfg.objective.epsilon);
        if (!kind.empty()) check(problems, "[objective] kind", [&] { cfg.objective.kind = objective_kind_from_string(kind); });
        if (!weighting.empty())
            check(problems, "[objective] weighting",
                  [&] { cfg.objective.weighting = objective_weighting_from_string(weighting); });
    }
    {
        section_reader r(sections, "network", problems);
        r.read("hidden", cfg.hidden);
    }
    {
        section_reader r(sections, "training", problems);
        auto& t = cfg.training;
        r.read("learning_rate", t.adam.learning_rate);
        r.read("beta1", t.adam.beta1);
        r.read("beta2", t.adam.beta2);
        r.read("adam_epsilon", t.adam.epsilon);
        r.read("iterations", t.iterations);
        r.read("batch_size", t.batch_size);
        r.read("gradient_clip", t.gradient_clip);
        r.read("eval_every", t.eval_every);
    }
    {
        section_reader r(sections, "closed_form", problems);
        r.read("p_min", cfg.p_min);
    }
    // Destructors of the readers above have appended unknown-key problems.
    if (!problems.empty()) throw config_error(problems);
    cfg.validate();
    return cfg;
}

experiment_config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw config_error({"cannot read config file " + path.string()});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::vector<std::string> experiment_config::problems() const
{
    std::vector<std::string> out;
    const bool needs_data = scenarios.source == scenario_source::bootstrap || filter.enabled;
    if (needs_data) {
        if (data.returns_csv.empty())
            out.push_back("[data] returns_csv is required for bootstrap scenarios or the inflation filter");
        else if (!std::filesystem::exists(data.returns_csv))
            out.push_back("[data] returns_csv " + data.returns_csv.string() + " does not exist");
    }
    if (!data.returns_csv.empty() && !needs_data && !std::filesystem::exists(data.returns_csv))
        out.push_back("[data] returns_csv " + data.returns_csv.string() + " does not exist");
    if (filter.window_months < 1) out.push_back("[filter] window_months must be >= 1");
    if (scenarios.n_train == 0) out.push_back("[scenarios] n_train must be positive");
    if (scenarios.n_test == 0) out.push_back("[scenarios] n_test must be positive");
    if (!(scenarios.expected_blocksize >= 1.0)) out.push_back("[scenarios] expected_blocksize must be >= 1");
    check(out, "[market]", [&] { market.validate(); });
    if (scenarios.source == scenario_source::simulate && market.assets.size() != investment.n_assets())
        out.push_back("[market] asset count does not match [investment] benchmark_weights");
    check(out, "[investment]", [&] { investment.validate(); });
    check(out, "[objective]", [&] { objective.validate(); });
    check(out, "[network]", [&] { network().validate(); });
    check(out, "[training]", [&] { training.validate(scenarios.n_train); });
    if (!(p_min <= 1.0)) out.push_back("[closed_form] p_min must be <= 1");
    if (!(p_min <= investment.p_max)) out.push_back("[closed_form] p_min must not exceed [investment] p_max");
    return out;
}

void experiment_config::validate() const
{
    auto p = problems();
    if (!p.empty()) throw config_error(std::move(p));
}

lfnn_config experiment_config::network() const
{
    lfnn_config c;
    c.n_assets = investment.n_assets();
    c.n_long = investment.n_long;
    c.p_max = investment.p_max;
    c.hidden = hidden;
    c.horizon = investment.T;
    c.w0 = investment.w0;
    return c;
}

std::string experiment_config::canonical() const
{
    nlohmann::json j;
    j["data"] = {{"returns_csv_sha256", data.returns_csv.empty() ? "" : file_digest(data.returns_csv)},
                 {"columns", data.columns},
                 {"deflate", data.deflate}};
    j["filter"] = {{"enabled", filter.enabled}, {"window_months", filter.window_months}, {"cutoff", filter.cutoff}};
    j["scenarios"] = {{"source", scenarios.source == scenario_source::bootstrap ? "bootstrap" : "simulate"},
                      {"n_train", scenarios.n_train},
                      {"n_test", scenarios.n_test},
                      {"expected_blocksize", scenarios.expected_blocksize},
                      {"per_segment", scenarios.per_segment}};
    auto& assets = j["market"]["assets"] = nlohmann::json::array();
    for (const auto& a : market.assets)
        assets.push_back({{"name", a.name},
                          {"mu", a.mu},
                          {"sigma", a.sigma},
                          {"lambda", a.lambda},
                          {"nu", a.nu},
                          {"iota", a.iota},
                          {"varsigma", a.varsigma}});
    j["market"]["rho"] = market.rho;
    j["investment"] = {{"T", investment.T},
                       {"dt", investment.dt},
                       {"w0", investment.w0},
                       {"annual_injection", investment.annual_injection},
                       {"benchmark_weights", investment.benchmark_weights},
                       {"p_max", investment.p_max},
                       {"borrow_premium", investment.borrow_premium},
                       {"n_long", investment.n_long}};
    j["objective"] = {{"kind", to_string(objective.kind)},
                      {"beta", objective.beta},
                      {"epsilon", objective.epsilon},
                      {"weighting", to_string(objective.weighting)}};
    j["network"] = {{"hidden", hidden}};
    j["training"] = {{"learning_rate", training.adam.learning_rate},
                     {"beta1", training.adam.beta1},
                     {"beta2", training.adam.beta2},
                     {"adam_epsilon", training.adam.epsilon},
                     {"iterations", training.iterations},
                     {"batch_size", training.batch_size},
                     {"gradient_clip", training.gradient_clip},
                     {"eval_every", training.eval_every}};
    j["closed_form"] = {{"p_min", p_min}};
    return j.dump();
}

std::string experiment_config::hash() const
{
    return sha256_hex(canonical()).substr(0, 12);
}

std::filesystem::path experiment_config::artifact_dir() const
{
    return output / (hash() + "-" + std::to_string(seed));
}

} // namespace outperform
