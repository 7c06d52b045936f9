#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "scap/error.hpp"

namespace scap {

/// Real waveform with its sample rate and provenance.
struct SampledSignal {
    std::vector<double> samples;
    double sample_rate = 0.0;
    std::string digest;              ///< digest of the producing configuration
    std::vector<std::string> stages; ///< processing history, in order applied

    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

inline double mean_square(std::span<const double> x)
{
    if (x.empty()) {
        return 0.0;
    }
    return std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / static_cast<double>(x.size());
}

inline bool all_finite(std::span<const double> x)
{
    for (double v : x) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

/// 64-bit FNV-1a, used for configuration digests.
inline std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_hex(std::string_view text) { return fmt::format("{:016x}", fnv1a64(text)); }

} // namespace scap
