#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pdg {

using Rng = std::mt19937_64;

/// Named random streams derived from one master seed.
enum class Stream : std::uint64_t {
    init = 1,
    rollout_noise = 2,
    novas_sampling = 3,
    initial_positions = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for (master, stream, a, b). Used as one stream per
/// (iteration, batch index) so results do not depend on scheduling.
inline Rng make_stream(std::uint64_t master, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

} // namespace pdg
