#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "scap/error.hpp"

namespace scap {

enum class BitOrigin { prbs, file, explicit_bits };

struct BitStream {
    std::vector<std::uint8_t> bits; ///< each entry 0 or 1
    BitOrigin origin = BitOrigin::explicit_bits;

    [[nodiscard]] std::size_t size() const { return bits.size(); }
    [[nodiscard]] bool empty() const { return bits.empty(); }
    friend bool operator==(const BitStream& a, const BitStream& b) { return a.bits == b.bits; }
};

inline constexpr std::size_t prbs15_period = 32767;

/// Maximal-length PRBS from the Fibonacci LFSR x^15 + x^14 + 1.
/// `seed` is the initial 15-bit register state and must be non-zero.
inline BitStream prbs15(std::uint32_t seed, std::size_t length)
{
    detail::require(seed != 0, "PRBS seed must be non-zero");
    detail::require(seed <= 0x7fff, "PRBS seed must fit in 15 bits");
    BitStream out;
    out.origin = BitOrigin::prbs;
    out.bits.resize(length);
    std::uint32_t state = seed;
    for (auto& b : out.bits) {
        const std::uint32_t fb = ((state >> 14) ^ (state >> 13)) & 1U;
        state = ((state << 1) | fb) & 0x7fffU;
        b = static_cast<std::uint8_t>(fb);
    }
    return out;
}

/// Maps an arbitrary 64-bit value onto a valid PRBS15 seed.
inline std::uint32_t prbs15_seed_from(std::uint64_t v)
{
    return static_cast<std::uint32_t>(v % prbs15_period) + 1U;
}

/// Writes one ASCII '0'/'1' per bit, newline after every 80 bits and after
/// a trailing partial block.
inline void write_bit_file(const std::string& path, const BitStream& s)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw runtime_failure("cannot open " + path + " for writing");
    }
    std::size_t col = 0;
    for (auto b : s.bits) {
        out.put(b ? '1' : '0');
        if (++col == 80) {
            out.put('\n');
            col = 0;
        }
    }
    if (col != 0) {
        out.put('\n');
    }
}

inline BitStream read_bit_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open " + path);
    }
    BitStream s;
    s.origin = BitOrigin::file;
    char c = 0;
    while (in.get(c)) {
        if (c == '0' || c == '1') {
            s.bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != '\n' && c != '\r') {
            throw config_error(path + ": bit files may only contain 0, 1 and newlines");
        }
    }
    return s;
}

} // namespace scap
