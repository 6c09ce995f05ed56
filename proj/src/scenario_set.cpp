#include "outperform/scenario_set.hpp"

#include "outperform/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>

namespace outperform {

static_assert(std::endian::native == std::endian::little, "scenario files are little-endian");

std::string to_string(provenance p)
{
    return p == provenance::bootstrap ? "bootstrap" : "simulated";
}

provenance provenance_from_string(const std::string& s)
{
    if (s == "bootstrap") return provenance::bootstrap;
    if (s == "simulated") return provenance::simulated;
    throw ingestion_error("unknown scenario provenance '" + s + "'");
}

void scenario_set::validate() const
{
    if (returns.size() != n_scenarios * n_periods * n_assets)
        throw ingestion_error("scenario set: data size does not match dimensions");
    if (!assets.empty() && assets.size() != n_assets)
        throw ingestion_error("scenario set: asset names do not match n_assets");
    if (!(dt > 0.0)) throw ingestion_error("scenario set: dt must be positive");
    for (std::size_t i = 0; i < returns.size(); ++i) {
        if (!std::isfinite(returns[i]) || returns[i] <= -1.0)
            throw ingestion_error("scenario set: return <= -1 at flat index " + std::to_string(i));
    }
}

void save_scenarios(const scenario_set& set, const std::filesystem::path& stem)
{
    set.validate();
    auto bin = stem;
    bin += ".bin";
    auto meta = stem;
    meta += ".json";
    {
        std::ofstream out(bin, std::ios::binary);
        if (!out) throw error("cannot write " + bin.string());
        out.write(reinterpret_cast<const char*>(set.returns.data()),
                  static_cast<std::streamsize>(set.returns.size() * sizeof(double)));
    }
    nlohmann::json j;
    j["n_scenarios"] = set.n_scenarios;
    j["n_periods"] = set.n_periods;
    j["n_assets"] = set.n_assets;
    j["dt"] = set.dt;
    j["seed"] = set.seed;
    j["provenance"] = to_string(set.origin);
    j["source"] = set.source;
    j["assets"] = set.assets;
    j["layout"] = "scenario,period,asset;float64;little-endian";
    std::ofstream out(meta);
    if (!out) throw error("cannot write " + meta.string());
    out << j.dump(2) << '\n';
}

scenario_set load_scenarios(const std::filesystem::path& stem)
{
    auto bin = stem;
    bin += ".bin";
    auto meta = stem;
    meta += ".json";
    std::ifstream min(meta);
    if (!min) throw ingestion_error("cannot open " + meta.string());
    nlohmann::json j;
    try {
        min >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ingestion_error(meta.string() + ": " + e.what());
    }
    scenario_set set(j.at("n_scenarios").get<std::size_t>(), j.at("n_periods").get<std::size_t>(),
                     j.at("n_assets").get<std::size_t>());
    set.dt = j.at("dt").get<double>();
    set.seed = j.at("seed").get<std::uint64_t>();
    set.origin = provenance_from_string(j.at("provenance").get<std::string>());
    set.source = j.value("source", "");
    set.assets = j.value("assets", std::vector<std::string>{});
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw ingestion_error("cannot open " + bin.string());
    const auto bytes = static_cast<std::streamsize>(set.returns.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(set.returns.data()), bytes);
    if (in.gcount() != bytes || in.peek() != std::char_traits<char>::eof())
        throw ingestion_error(bin.string() + ": size does not match " + meta.string());
    set.validate();
    return set;
}

} // namespace outperform
