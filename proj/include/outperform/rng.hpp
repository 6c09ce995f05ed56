#pragma once

#include <cstdint>
#include <random>

namespace outperform {

using rng_engine = std::mt19937_64;

/// Stream domains keep draws for different purposes apart even when they share
/// a user seed.
enum class stream_domain : std::uint32_t {
    bootstrap = 1,
    simulation = 2,
    init = 3,
    minibatch = 4,
};

/// Independent generator for (seed, domain, index). Scenario i of a set is
/// therefore identical no matter how many scenarios are requested or which
/// thread produces it.
inline rng_engine substream(std::uint64_t seed, stream_domain domain, std::uint64_t index)
{
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(domain),
        static_cast<std::uint32_t>(index & 0xffffffffu),
        static_cast<std::uint32_t>(index >> 32),
    };
    return rng_engine(seq);
}

} // namespace outperform
