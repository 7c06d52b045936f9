#pragma once

// Gray-labelled, zero-mean, unit-average-power PAM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scap/bits.hpp"
#include "scap/error.hpp"

namespace scap {

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline int bits_per_level(int levels)
{
    detail::require(levels >= 2 && is_power_of_two(levels), "PAM alphabet size must be a power of two >= 2");
    int k = 0;
    while ((1 << k) < levels) {
        ++k;
    }
    return k;
}

/// Amplitude of level index i (0 = most negative), unit average power.
inline double pam_level(int index, int levels)
{
    const double scale = std::sqrt(3.0 / (static_cast<double>(levels) * levels - 1.0));
    return (2.0 * index - (levels - 1)) * scale;
}

inline std::vector<double> pam_alphabet(int levels)
{
    bits_per_level(levels);
    std::vector<double> a(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        a[static_cast<std::size_t>(i)] = pam_level(i, levels);
    }
    return a;
}

namespace detail {

inline unsigned gray_to_binary(unsigned g)
{
    for (unsigned shift = g >> 1; shift != 0; shift >>= 1) {
        g ^= shift;
    }
    return g;
}

} // namespace detail

/// Bits are consumed MSB first in groups of log2(levels). The group value is
/// the Gray label of the level, so adjacent levels differ in one bit.
inline std::vector<double> pam_map(std::span<const std::uint8_t> bits, int levels)
{
    const int k = bits_per_level(levels);
    detail::require(bits.size() % static_cast<std::size_t>(k) == 0,
                    "bit count is not a multiple of log2(levels)");
    std::vector<double> out(bits.size() / static_cast<std::size_t>(k));
    for (std::size_t s = 0; s < out.size(); ++s) {
        unsigned label = 0;
        for (int b = 0; b < k; ++b) {
            label = (label << 1) | bits[s * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)];
        }
        out[s] = pam_level(static_cast<int>(detail::gray_to_binary(label)), levels);
    }
    return out;
}

inline std::vector<double> pam_map(const BitStream& bits, int levels) { return pam_map(bits.bits, levels); }

/// Nearest-level decision followed by Gray de-labelling.
inline BitStream pam_demap(std::span<const double> symbols, int levels)
{
    const int k = bits_per_level(levels);
    const double scale = std::sqrt(3.0 / (static_cast<double>(levels) * levels - 1.0));
    BitStream out;
    out.bits.reserve(symbols.size() * static_cast<std::size_t>(k));
    for (double x : symbols) {
        const double pos = (x / scale + (levels - 1)) / 2.0;
        const int idx = std::clamp(static_cast<int>(std::lround(pos)), 0, levels - 1);
        const unsigned label = static_cast<unsigned>(idx) ^ (static_cast<unsigned>(idx) >> 1);
        for (int b = k - 1; b >= 0; --b) {
            out.bits.push_back(static_cast<std::uint8_t>((label >> b) & 1U));
        }
    }
    return out;
}

/// Unipolar OOK levels before normalisation: bit 0 -> 0, bit 1 -> 2.
inline std::vector<double> ook_map(std::span<const std::uint8_t> bits)
{
    std::vector<double> out(bits.size());
    std::transform(bits.begin(), bits.end(), out.begin(), [](std::uint8_t b) { return b ? 2.0 : 0.0; });
    return out;
}

/// Each symbol followed by n_ss - 1 zeros.
inline std::vector<double> upsample_zero_pad(std::span<const double> symbols, int samples_per_symbol)
{
    detail::require(samples_per_symbol >= 1, "samples per symbol must be >= 1");
    std::vector<double> out(symbols.size() * static_cast<std::size_t>(samples_per_symbol), 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        out[i * static_cast<std::size_t>(samples_per_symbol)] = symbols[i];
    }
    return out;
}

} // namespace scap
