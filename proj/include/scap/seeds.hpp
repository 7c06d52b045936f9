#pragma once

// Seed splitting. Every random stream in a sweep is keyed by its coordinates:
//
//   h = master
//   for each coordinate c:  h = splitmix64(h ^ (c + 0x9E3779B97F4A7C15))
//
// so point_seed = derive_seed(master, {format, subband, rate_index, ...}).

#include <cstdint>
#include <initializer_list>

namespace scap {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords)
{
    std::uint64_t h = master;
    for (auto c : coords) {
        h = splitmix64(h ^ (c + 0x9E3779B97F4A7C15ULL));
    }
    return h;
}

} // namespace scap
